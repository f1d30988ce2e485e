#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "adapool/backward.h"
#include "adapool/quality.h"

namespace adapool {

// Process exit codes shared by every command.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitCheckFailed = 3,
};

struct Console {
  std::ostream& out;
  std::ostream& err;
};

// Method string plus the optional overrides accepted by every command:
// --distance for idw and --beta for ada.
struct MethodOptions {
  std::string method = "avg";
  std::optional<std::string> distance;
  std::optional<std::string> beta;  // "learned" or a value in [0, 1]
  std::uint64_t seed = 0;
};

// Throws InvalidArgument on malformed names.
OperatorSpec resolve_method(const MethodOptions& options);

struct PoolCommand {
  std::filesystem::path input;
  std::filesystem::path output;
  MethodOptions method;
  std::size_t kernel = 2;
  std::optional<std::filesystem::path> mask_out;
  // Pool on pixel values divided by 255, then scale back.
  bool unit_range = true;
};

struct UnpoolCommand {
  std::optional<std::filesystem::path> pooled_image;
  std::filesystem::path mask_file;
  std::filesystem::path output;
  bool double_softmax = false;
};

struct EvalCommand {
  std::filesystem::path image_dir;
  std::vector<std::string> methods{"avg"};
  std::vector<std::size_t> kernels{2, 3, 5};
  std::filesystem::path csv_out;
  std::uint64_t seed = 0;
  Inflate inflate = Inflate::kNearest;
  bool unit_range = true;
};

struct GradcheckCommand {
  std::string method = "em";
  std::string shape = "1x8x8";
  std::uint64_t seed = 0;
  GradMode mode = GradMode::kExactAnalytic;
  std::size_t kernel = 2;
};

struct FitBetaCommand {
  std::filesystem::path input;
  // Either a target image of the pooled size or an operator whose output on
  // the input serves as target.
  std::optional<std::filesystem::path> target_image;
  std::optional<std::string> target_method;
  std::size_t kernel = 2;
  std::size_t steps = 500;
  double lr = 0.05;
  std::optional<std::filesystem::path> csv_out;
  std::optional<std::filesystem::path> beta_out;
};

struct BenchCommand {
  std::string shape = "3x512x512";
  std::vector<std::string> methods{"avg", "max", "em", "edscw", "ada"};
  std::size_t repeats = 10;
  std::size_t kernel = 2;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> csv_out;
};

int cmd_pool(const PoolCommand& cmd, Console io);
int cmd_unpool(const UnpoolCommand& cmd, Console io);
int cmd_eval(const EvalCommand& cmd, Console io);
int cmd_gradcheck(const GradcheckCommand& cmd, Console io);
int cmd_fitbeta(const FitBetaCommand& cmd, Console io);
int cmd_bench(const BenchCommand& cmd, Console io);

}  // namespace adapool
