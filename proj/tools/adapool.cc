// Command line front-end: pool, unpool, eval, gradcheck, fitbeta, bench.
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "adapool/commands.h"

using namespace adapool;

namespace {

void add_method_flags(CLI::App* app, MethodOptions& m) {
  app->add_option("--method", m.method,
                  "avg, max, sum, powavg:<rho>, stoch, s3, idw:<distance>, "
                  "em, edscw, ada:<beta|learned>")
      ->capture_default_str();
  app->add_option("--distance", m.distance,
                  "idw distance: l1, l2, l2-channel, huber[:delta], "
                  "chebyshev, gower");
  app->add_option("--beta", m.beta, "ada fusion weight: learned or [0, 1]");
  app->add_option("--seed", m.seed, "seed for stoch and s3")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exponential-weighting pooling operators and evaluation"};
  app.require_subcommand(1);

  PoolCommand pool_cmd;
  auto* pool = app.add_subcommand("pool", "Downsample an image");
  pool->add_option("input", pool_cmd.input, "PNG or PPM/PGM")->required();
  pool->add_option("output", pool_cmd.output)->required();
  add_method_flags(pool, pool_cmd.method);
  pool->add_option("--kernel,-k", pool_cmd.kernel)->capture_default_str();
  pool->add_option("--mask-out", pool_cmd.mask_out,
                   "write weight masks for unpool (em, edscw, ada)");
  std::string pool_range = "unit";
  pool->add_option("--pool-range", pool_range,
                   "pool on pixels scaled to [0, 1] (unit) or on [0, 255] (raw)")
      ->check(CLI::IsMember({"unit", "raw"}))
      ->capture_default_str();

  UnpoolCommand unpool_cmd;
  auto* unpool = app.add_subcommand("unpool", "Inflate with stored masks");
  unpool->add_option("mask_file", unpool_cmd.mask_file)->required();
  unpool->add_option("output", unpool_cmd.output)->required();
  unpool->add_option("--pooled", unpool_cmd.pooled_image,
                     "pooled image replacing the one stored in the mask");
  unpool->add_flag("--double-softmax", unpool_cmd.double_softmax,
                   "apply a second softmax to the stored eDSC weights");

  EvalCommand eval_cmd;
  std::string inflate = "nearest";
  auto* eval = app.add_subcommand("eval", "Round-trip SSIM/PSNR over images");
  eval->add_option("image_dir", eval_cmd.image_dir)->required();
  eval->add_option("--method", eval_cmd.methods, "repeatable")
      ->delimiter(',');
  eval->add_option("--kernel,-k", eval_cmd.kernels, "repeatable")
      ->delimiter(',');
  eval->add_option("--csv", eval_cmd.csv_out)->required();
  eval->add_option("--seed", eval_cmd.seed)->capture_default_str();
  eval->add_option("--inflate", inflate)
      ->check(CLI::IsMember({"nearest", "bilinear"}))
      ->capture_default_str();
  std::string eval_range = "unit";
  eval->add_option("--pool-range", eval_range,
                   "pool on pixels scaled to [0, 1] (unit) or on [0, 255] (raw)")
      ->check(CLI::IsMember({"unit", "raw"}))
      ->capture_default_str();

  GradcheckCommand grad_cmd;
  std::string grad_mode = "exact";
  auto* grad = app.add_subcommand("gradcheck",
                                  "Analytic gradients vs finite differences");
  grad->add_option("--method", grad_cmd.method, "em, edscw or ada")
      ->capture_default_str();
  grad->add_option("--shape", grad_cmd.shape, "CxHxW or CxTxHxW")
      ->capture_default_str();
  grad->add_option("--seed", grad_cmd.seed)->capture_default_str();
  grad->add_option("--kernel,-k", grad_cmd.kernel)->capture_default_str();
  grad->add_option("--grad-mode", grad_mode)
      ->check(CLI::IsMember({"paper", "exact"}))
      ->capture_default_str();

  FitBetaCommand fit_cmd;
  auto* fit = app.add_subcommand("fitbeta", "Fit a beta map to a target");
  fit->add_option("input", fit_cmd.input)->required();
  auto* target = fit->add_option("--target", fit_cmd.target_image,
                                 "target image of the pooled size");
  fit->add_option("--target-method", fit_cmd.target_method,
                  "use this operator's output on the input as target")
      ->excludes(target);
  fit->add_option("--kernel,-k", fit_cmd.kernel)->capture_default_str();
  fit->add_option("--steps", fit_cmd.steps)->capture_default_str();
  fit->add_option("--lr", fit_cmd.lr)->capture_default_str();
  fit->add_option("--csv", fit_cmd.csv_out, "loss trace");
  fit->add_option("--beta-out", fit_cmd.beta_out, "final beta map as CSV");

  BenchCommand bench_cmd;
  auto* bench = app.add_subcommand("bench", "Forward/backward latency");
  bench->add_option("--shape", bench_cmd.shape)->capture_default_str();
  bench->add_option("--method", bench_cmd.methods, "repeatable")
      ->delimiter(',');
  bench->add_option("--repeats", bench_cmd.repeats)->capture_default_str();
  bench->add_option("--kernel,-k", bench_cmd.kernel)->capture_default_str();
  bench->add_option("--seed", bench_cmd.seed)->capture_default_str();
  bench->add_option("--csv", bench_cmd.csv_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const Console io{std::cout, std::cerr};
  if (*pool) {
    pool_cmd.unit_range = pool_range == "unit";
    return cmd_pool(pool_cmd, io);
  }
  if (*unpool) return cmd_unpool(unpool_cmd, io);
  if (*eval) {
    eval_cmd.inflate =
        inflate == "bilinear" ? Inflate::kBilinear : Inflate::kNearest;
    eval_cmd.unit_range = eval_range == "unit";
    return cmd_eval(eval_cmd, io);
  }
  if (*grad) {
    grad_cmd.mode = parse_grad_mode(grad_mode);
    return cmd_gradcheck(grad_cmd, io);
  }
  if (*fit) return cmd_fitbeta(fit_cmd, io);
  if (*bench) return cmd_bench(bench_cmd, io);
  return kExitUsage;
}
