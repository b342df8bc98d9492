#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "logicmp/demo.hpp"

namespace logicmp::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kCheckFailed = 3 };

struct InferOptions {
  std::string rules;
  std::optional<std::string> evidence;
  std::optional<std::string> unary;
  std::optional<std::string> query;
  std::vector<std::string> entities;
  std::size_t iterations = 5;
  std::vector<std::string> weights;  // NAME=V
  std::optional<std::string> output;
  std::string format = "csv";
  std::uint64_t seed = 0;  // inference is deterministic; accepted for a uniform interface
  bool oracle = false;
  double damping = 0.0;
  bool include_observed = false;
  bool skip_tautologies = false;
};

struct PlanOptions {
  std::optional<std::string> rules;
  std::vector<std::string> specs;
  std::size_t domain_size = 10;
};

struct AucprOptions {
  std::string predictions;
  std::string truth;
};

struct CheckOptions {
  std::size_t instances = 50;
  std::uint64_t seed = 1;
};

int cmd_infer(const InferOptions& options, std::ostream& out, std::ostream& err);
int cmd_plan(const PlanOptions& options, std::ostream& out, std::ostream& err);
int cmd_demo_transitivity(const DemoConfig& config, std::ostream& out, std::ostream& err);
int cmd_aucpr(const AucprOptions& options, std::ostream& out, std::ostream& err);
int cmd_check(const CheckOptions& options, std::ostream& out, std::ostream& err);

}  // namespace logicmp::cli
