#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "adapool/bench.h"
#include "adapool/commands.h"
#include "adapool/errors.h"
#include "adapool/eval_record.h"
#include "adapool/fit_beta.h"
#include "adapool/gradcheck.h"
#include "adapool/image_io.h"
#include "adapool/mask_file.h"
#include "adapool/unpool.h"
#include "support/reference.h"

using namespace adapool;
using adapool::oracle::random_map;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("adapool_test_" + std::to_string(::testing::UnitTest::GetInstance()
                                                  ->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

struct Captured {
  std::ostringstream out, err;
  Console io() { return Console{out, err}; }
};

ActivationMap integer_image(std::mt19937_64& rng, MapShape shape) {
  std::uniform_int_distribution<int> px(0, 255);
  std::vector<double> v(shape.size());
  for (auto& x : v) x = px(rng);
  return ActivationMap(shape, v);
}

MethodOptions named(std::string method) {
  MethodOptions m;
  m.method = std::move(method);
  return m;
}

PoolCommand make_pool(fs::path in, fs::path out, MethodOptions method,
                      std::size_t kernel, std::optional<fs::path> mask) {
  PoolCommand cmd;
  cmd.input = std::move(in);
  cmd.output = std::move(out);
  cmd.method = std::move(method);
  cmd.kernel = kernel;
  cmd.mask_out = std::move(mask);
  return cmd;
}

std::vector<std::uint8_t> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

// ---- image io ----

TEST(ImageIo, PngAndPnmRoundTrip) {
  TempDir dir;
  std::mt19937_64 rng(1);
  for (std::size_t ch : {1, 3}) {
    const auto img = integer_image(rng, {ch, {7, 9}});
    for (auto ext : {".png", ch == 1 ? ".pgm" : ".ppm"}) {
      const auto path = dir / ("img" + std::string(ext));
      write_image(path, img);
      EXPECT_EQ(read_image(path), img) << ext;
    }
  }
}

TEST(ImageIo, RoundsAndClamps) {
  TempDir dir;
  write_image(dir / "x.png", ActivationMap(1, {1, 3}, {-4.0, 12.6, 300.0}));
  EXPECT_EQ(read_image(dir / "x.png"), ActivationMap(1, {1, 3}, {0, 13, 255}));
}

TEST(ImageIo, Errors) {
  TempDir dir;
  EXPECT_THROW(read_image(dir / "missing.png"), FormatError);
  std::ofstream(dir / "junk.png") << "not an image";
  EXPECT_THROW(read_image(dir / "junk.png"), FormatError);
  EXPECT_THROW(write_image(dir / "y.png", ActivationMap(2, {2, 2})), ShapeError);
  EXPECT_EQ(crop_to_multiple(ActivationMap(1, {7, 5}), 3).spatial(),
            (std::vector<std::size_t>{6, 3}));
}

// ---- mask file ----

TEST(MaskFileTest, RoundTripsBitExactly) {
  std::mt19937_64 rng(2);
  for (auto name : {"em", "edscw", "ada:0.3"}) {
    const auto x = random_map(rng, {3, {6, 8}}, -1, 1);
    const auto res = pool(OperatorSpec::parse(name), x, PoolGeometry::square(2));
    const MaskFile file = mask_file_from(res);
    const auto bytes = encode_mask_file(file);
    const MaskFile back = decode_mask_file(bytes);
    EXPECT_EQ(back.pooled, file.pooled);
    EXPECT_EQ(back.masks.em, file.masks.em);
    EXPECT_EQ(back.masks.edsc, file.masks.edsc);
    EXPECT_EQ(back.masks.geometry, file.masks.geometry);
    EXPECT_EQ(back.masks.input_shape, file.masks.input_shape);
    EXPECT_EQ(back.beta.has_value(), file.beta.has_value());
    if (back.beta) {
      EXPECT_TRUE(std::equal(back.beta->values().begin(), back.beta->values().end(),
                             file.beta->values().begin()));
    }
    EXPECT_EQ(encode_mask_file(back), bytes);
  }
}

TEST(MaskFileTest, HeaderLayout) {
  const auto res = pool(OperatorSpec::parse("ada:0.5"), ActivationMap(1, {4, 4}),
                        PoolGeometry::square(2));
  const auto bytes = encode_mask_file(mask_file_from(res));
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 12), "ADAPOOLMASK1");
  auto u32 = [&](std::size_t at) {
    return bytes[at] | bytes[at + 1] << 8 | bytes[at + 2] << 16 |
           static_cast<std::uint32_t>(bytes[at + 3]) << 24;
  };
  EXPECT_EQ(u32(12), 2u);   // dims
  EXPECT_EQ(u32(16), 1u);   // channels
  EXPECT_EQ(u32(20), 2u);   // kernel h
  EXPECT_EQ(u32(44), 4u);   // input h
  EXPECT_EQ(u32(52), 2u);   // output h
  EXPECT_EQ(bytes[60], 0b111);
  // header 64, pooled 4, em 16, edsc 16, beta 4 doubles, crc 4
  EXPECT_EQ(bytes.size(), 64u + 8 * (4 + 16 + 16 + 4) + 4);
}

TEST(MaskFileTest, CorruptionDetected) {
  const auto res = pool(OperatorSpec::parse("em"), ActivationMap(1, {4, 4}),
                        PoolGeometry::square(2));
  auto bytes = encode_mask_file(mask_file_from(res));
  auto flipped = bytes;
  flipped[80] ^= 0x10;
  EXPECT_THROW(decode_mask_file(flipped), FormatError);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 9);
  EXPECT_THROW(decode_mask_file(truncated), FormatError);
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(decode_mask_file(magic), FormatError);
  const auto avg = pool(OperatorSpec::parse("avg"), ActivationMap(1, {4, 4}),
                        PoolGeometry::square(2));
  EXPECT_THROW(mask_file_from(avg), MissingState);
}

// ---- eval records ----

TEST(EvalCsv, RowsParseBack) {
  std::vector<EvalRecord> rows{
      {"img_a", "ada:0.5", 2, 0.912345678901234567, 31.25, 120, 340, std::nullopt},
      {"img_a", "stoch", 3, -0.1, std::numeric_limits<double>::infinity(), 0, 0, 42},
      {"b", "idw:huber:0.25", 5, 1.0 / 3.0, 1e-300, 5, 6, std::nullopt}};
  std::stringstream buf;
  write_eval_csv(buf, rows);
  const auto back = read_eval_csv(buf);
  EXPECT_EQ(back, rows);
  std::string header;
  std::stringstream again;
  write_eval_csv(again, rows);
  std::getline(again, header);
  EXPECT_EQ(header, kEvalCsvHeader);
  EXPECT_THROW(parse_csv_row("a,b,c"), FormatError);
  EXPECT_THROW(parse_csv_row("a,avg,2,0.5,1,-1,2,"), FormatError);
}

TEST(EvalCsv, SummaryMeans) {
  std::vector<EvalRecord> rows{{"a", "avg", 2, 0.5, 10, 1, 2, {}},
                               {"b", "avg", 2, 0.7, 20, 3, 4, {}},
                               {"a", "max", 2, 0.1, 5, 1, 1, {}}};
  const auto s = summarize(rows);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].method, "avg");
  EXPECT_EQ(s[0].count, 2u);
  EXPECT_DOUBLE_EQ(s[0].mean_ssim, 0.6);
  EXPECT_DOUBLE_EQ(s[0].mean_psnr_db, 15.0);
  EXPECT_DOUBLE_EQ(s[0].mean_backward_us, 3.0);
  sort_records(rows);
  EXPECT_EQ(rows[0].method, "avg");
  EXPECT_EQ(rows[1].method, "max");
  EXPECT_EQ(rows[2].image_id, "b");
}

// ---- gradcheck ----

TEST(Gradcheck, ExactPassesWeightedDeviates) {
  GradcheckOptions o;
  for (auto m : {Method::kEm, Method::kEdscw, Method::kAda}) {
    o.method = m;
    o.mode = GradMode::kExactAnalytic;
    const auto exact = run_gradcheck(o);
    EXPECT_TRUE(exact.passed);
    EXPECT_LT(exact.max_error(), 1e-5);
    EXPECT_EQ(exact.beta_error.has_value(), m == Method::kAda);
    o.mode = GradMode::kPaperWeighted;
    EXPECT_GT(run_gradcheck(o).max_error(), 1e-3);
  }
  EXPECT_EQ(parse_shape("3x4x5x6"), (MapShape{3, {4, 5, 6}}));
  EXPECT_THROW(parse_shape("3x4"), InvalidArgument);
  EXPECT_THROW(parse_shape("3xax4"), InvalidArgument);
}

// ---- fit beta ----

TEST(FitBeta, ZeroLearningRateKeepsLossConstant) {
  std::mt19937_64 rng(3);
  const auto x = random_map(rng, {2, {8, 8}}, 0, 3);
  const auto g = PoolGeometry::square(2);
  const auto target = pool_em(x, g).output;
  const auto fit = fit_beta(x, g, target, {.steps = 20, .lr = 0.0});
  ASSERT_EQ(fit.loss.size(), 21u);
  for (double l : fit.loss) EXPECT_EQ(l, fit.loss.front());
  EXPECT_EQ(fit.beta.mean(), 0.5);
}

TEST(FitBeta, MovesTowardTargetBranch) {
  std::mt19937_64 rng(4);
  const auto x = random_map(rng, {3, {16, 16}}, 0, 255);
  const auto g = PoolGeometry::square(2);
  const auto em = fit_beta(x, g, pool_em(x, g).output);
  const auto ed = fit_beta(x, g, pool_edscw(x, g).output);
  EXPECT_LT(em.beta.mean(), 0.1);
  EXPECT_GT(ed.beta.mean(), 0.9);
  for (double b : em.beta.values()) {
    EXPECT_GE(b, 0.0);
    EXPECT_LE(b, 1.0);
  }
  EXPECT_LT(em.loss.back(), em.loss.front());
  EXPECT_THROW(fit_beta(x, g, x), ShapeError);
}

// ---- bench ----

TEST(Bench, AvgFirstAndSchemaStable) {
  BenchOptions o;
  o.shape = MapShape{1, {32, 32}};
  o.methods = {OperatorSpec::parse("em"), OperatorSpec::parse("ada:0.5")};
  const auto rows = run_bench(o);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].method, "avg");
  EXPECT_EQ(rows[0].forward_ratio, 1.0);
  EXPECT_GT(rows[2].peak_alloc_bytes, 0u);
  std::ostringstream a, b;
  write_bench_csv(a, rows);
  o.repeats = 30;
  write_bench_csv(b, run_bench(o));
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')),
            b.str().substr(0, b.str().find('\n')));
  o.repeats = 9;
  EXPECT_THROW(run_bench(o), InvalidArgument);
}

// ---- commands ----

TEST(Commands, PoolConstantAndMaskSums) {
  TempDir dir;
  write_image(dir / "c.png", ActivationMap(1, {4, 4}, std::vector<double>(16, 90)));
  Captured cap;
  auto cmd = make_pool(dir / "c.png", dir / "o.png", {}, 2, std::nullopt);
  ASSERT_EQ(cmd_pool(cmd, cap.io()), kExitOk);
  EXPECT_EQ(read_image(dir / "o.png"),
            ActivationMap(1, {2, 2}, std::vector<double>(4, 90)));

  std::mt19937_64 rng(5);
  write_image(dir / "r.png", integer_image(rng, {3, {6, 6}}));
  cmd = make_pool(dir / "r.png", dir / "o2.png", named("ada:0.5"), 2,
                dir / "m.bin");
  ASSERT_EQ(cmd_pool(cmd, cap.io()), kExitOk);
  const auto mask = read_mask_file(dir / "m.bin");
  for (std::size_t r = 0; r < 9; ++r) {
    double s = 0;
    for (double w : mask.masks.edsc_region(r)) s += w;
    EXPECT_NEAR(s, 1.0, 1e-12);
    for (std::size_t c = 0; c < 3; ++c) {
      s = 0;
      for (double w : mask.masks.em_region(c, r)) s += w;
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Commands, StochasticSeedDeterministic) {
  TempDir dir;
  std::mt19937_64 rng(6);
  write_image(dir / "r.png", integer_image(rng, {3, {10, 10}}));
  Captured cap;
  MethodOptions m{.method = "stoch", .distance = {}, .beta = {}, .seed = 7};
  ASSERT_EQ(cmd_pool(make_pool(dir / "r.png", dir / "a.png", m, 2, {}), cap.io()), kExitOk);
  ASSERT_EQ(cmd_pool(make_pool(dir / "r.png", dir / "b.png", m, 2, {}), cap.io()), kExitOk);
  EXPECT_EQ(slurp(dir / "a.png"), slurp(dir / "b.png"));
}

TEST(Commands, PoolUsageAndDataErrors) {
  TempDir dir;
  Captured cap;
  write_image(dir / "r.png", ActivationMap(1, {4, 4}));
  EXPECT_EQ(cmd_pool(make_pool(dir / "r.png", dir / "o.png", named("nope"), 2, {}),
                     cap.io()),
            kExitUsage);
  EXPECT_EQ(cmd_pool(make_pool(dir / "r.png", dir / "o.png", named("avg"), 2,
                      dir / "m.bin"),
                     cap.io()),
            kExitUsage);
  EXPECT_EQ(cmd_pool(make_pool(dir / "none.png", dir / "o.png", {}, 2, {}), cap.io()),
            kExitData);
  EXPECT_EQ(cmd_pool(make_pool(dir / "r.png", dir / "o.png", {}, 5, {}), cap.io()), kExitData);
  MethodOptions bad_distance{.method = "avg", .distance = "l1", .beta = {}, .seed = 0};
  EXPECT_EQ(cmd_pool(make_pool(dir / "r.png", dir / "o.png", bad_distance, 2, {}), cap.io()),
            kExitUsage);
}

TEST(Commands, UnpoolMassAndIdentity) {
  TempDir dir;
  Captured cap;
  write_image(dir / "c.png", ActivationMap(1, {4, 4}, std::vector<double>(16, 40)));
  ASSERT_EQ(cmd_pool(make_pool(dir / "c.png", dir / "p.png", named("em"), 2,
                      dir / "m.bin"),
                     cap.io()),
            kExitOk);
  ASSERT_EQ(cmd_unpool({std::nullopt, dir / "m.bin", dir / "u.png", false}, cap.io()),
            kExitOk);
  EXPECT_EQ(read_image(dir / "u.png"),
            ActivationMap(1, {4, 4}, std::vector<double>(16, 10)));

  std::mt19937_64 rng(7);
  const auto img = integer_image(rng, {3, {5, 5}});
  write_image(dir / "r.png", img);
  ASSERT_EQ(cmd_pool(make_pool(dir / "r.png", dir / "p1.png", named("ada:0.5"), 1,
                      dir / "m1.bin"),
                     cap.io()),
            kExitOk);
  ASSERT_EQ(cmd_unpool({dir / "p1.png", dir / "m1.bin", dir / "u1.png", false},
                       cap.io()),
            kExitOk);
  EXPECT_EQ(read_image(dir / "u1.png"), img);
}

TEST(Commands, UnpoolCorruptChecksumWritesNothing) {
  TempDir dir;
  Captured cap;
  write_image(dir / "c.png", ActivationMap(1, {4, 4}, std::vector<double>(16, 40)));
  ASSERT_EQ(cmd_pool(make_pool(dir / "c.png", dir / "p.png", named("ada"), 2,
                      dir / "m.bin"),
                     cap.io()),
            kExitOk);
  auto bytes = slurp(dir / "m.bin");
  bytes[70] ^= 1;
  std::ofstream(dir / "m.bin", std::ios::binary)
      .write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
  EXPECT_EQ(cmd_unpool({std::nullopt, dir / "m.bin", dir / "u.png", false}, cap.io()),
            kExitData);
  EXPECT_FALSE(fs::exists(dir / "u.png"));
}

TEST(Commands, EvalCardinalityAndAnchor) {
  TempDir dir;
  Captured cap;
  std::mt19937_64 rng(8);
  fs::create_directories(dir / "imgs");
  write_image(dir / "imgs" / "one.png", integer_image(rng, {3, {24, 24}}));
  std::ofstream(dir / "imgs" / "broken.png") << "garbage";
  EvalCommand cmd;
  cmd.image_dir = dir / "imgs";
  cmd.methods = {"max", "em"};
  cmd.kernels = {2, 3};
  cmd.csv_out = dir / "out.csv";
  ASSERT_EQ(cmd_eval(cmd, cap.io()), kExitOk);
  EXPECT_NE(cap.err.str().find("broken.png"), std::string::npos);
  std::ifstream in(cmd.csv_out);
  const auto rows = read_eval_csv(in);
  EXPECT_EQ(rows.size(), 6u);  // avg added as anchor
  EXPECT_EQ(std::count_if(rows.begin(), rows.end(),
                          [](const EvalRecord& r) { return r.method == "avg"; }),
            2);
  auto sorted = rows;
  sort_records(sorted);
  EXPECT_EQ(sorted, rows);

  cmd.methods = {"avg", "max"};
  ASSERT_EQ(cmd_eval(cmd, cap.io()), kExitOk);
  std::ifstream in2(cmd.csv_out);
  EXPECT_EQ(read_eval_csv(in2).size(), 4u);
  EXPECT_TRUE(fs::exists(dir / "out.summary.csv"));

  fs::remove(dir / "imgs" / "one.png");
  EXPECT_EQ(cmd_eval(cmd, cap.io()), kExitData);
}

TEST(Commands, GradcheckExitCodes) {
  Captured cap;
  EXPECT_EQ(cmd_gradcheck({"em", "1x8x8", 0, GradMode::kExactAnalytic, 2}, cap.io()),
            kExitOk);
  EXPECT_NE(cap.out.str().find("PASS"), std::string::npos);
  EXPECT_EQ(cmd_gradcheck({"ada", "1x8x8", 0, GradMode::kPaperWeighted, 2}, cap.io()),
            kExitOk);
  EXPECT_NE(cap.out.str().find("informational"), std::string::npos);
  EXPECT_EQ(cmd_gradcheck({"avg", "1x8x8", 0, GradMode::kExactAnalytic, 2}, cap.io()),
            kExitUsage);
  EXPECT_EQ(cmd_gradcheck({"em", "5x16x16", 0, GradMode::kExactAnalytic, 2}, cap.io()),
            kExitUsage);
}

TEST(Commands, FitBetaWritesTrace) {
  TempDir dir;
  Captured cap;
  std::mt19937_64 rng(9);
  write_image(dir / "r.png", integer_image(rng, {1, {8, 8}}));
  FitBetaCommand cmd;
  cmd.input = dir / "r.png";
  cmd.target_method = "em";
  cmd.steps = 10;
  cmd.csv_out = dir / "trace.csv";
  cmd.beta_out = dir / "beta.csv";
  ASSERT_EQ(cmd_fitbeta(cmd, cap.io()), kExitOk);
  std::ifstream in(dir / "trace.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "step,loss,mean_beta");
  int n = 0;
  while (std::getline(in, line)) ++n;
  EXPECT_EQ(n, 11);
  cmd.target_image = dir / "r.png";
  EXPECT_EQ(cmd_fitbeta(cmd, cap.io()), kExitUsage);
  cmd.target_method.reset();
  EXPECT_EQ(cmd_fitbeta(cmd, cap.io()), kExitData);  // shape mismatch
}
