#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "fcgan/data.hpp"
#include "fcgan/resample.hpp"
#include "test_util.hpp"

namespace fcgan {
namespace {

namespace fs = std::filesystem;
using test::TempDir;

// Cubic convolution kernel written from its textbook piecewise cubic form.
double reference_kernel(double x) {
  const double a = -0.5;
  const double t = std::fabs(x);
  if (t <= 1.0) return (a + 2) * t * t * t - (a + 3) * t * t + 1;
  if (t < 2.0) return a * t * t * t - 5 * a * t * t + 8 * a * t - 4 * a;
  return 0.0;
}

// Direct 2-D sum over the 4x4 neighbourhood with half-pixel centres and clamped edges.
double reference_pixel(const Image& img, std::size_t c, std::size_t oy, std::size_t ox, std::size_t out_h,
                       std::size_t out_w) {
  const long h = static_cast<long>(img.dim(1)), w = static_cast<long>(img.dim(2));
  const double sy = (oy + 0.5) * h / double(out_h) - 0.5;
  const double sx = (ox + 0.5) * w / double(out_w) - 0.5;
  double sum = 0.0;
  for (long iy = static_cast<long>(std::floor(sy)) - 1; iy <= static_cast<long>(std::floor(sy)) + 2; ++iy) {
    for (long ix = static_cast<long>(std::floor(sx)) - 1; ix <= static_cast<long>(std::floor(sx)) + 2; ++ix) {
      const long cy = std::clamp(iy, 0L, h - 1), cx = std::clamp(ix, 0L, w - 1);
      sum += reference_kernel(sy - iy) * reference_kernel(sx - ix) * img[(c * h + cy) * w + cx];
    }
  }
  return sum;
}

TEST(Keys, KernelValues) {
  EXPECT_EQ(keys_kernel(0.0), 1.0);
  EXPECT_EQ(keys_kernel(1.0), 0.0);
  EXPECT_EQ(keys_kernel(2.0), 0.0);
  EXPECT_EQ(keys_kernel(0.5), 0.5625);
  EXPECT_EQ(keys_kernel(1.5), -0.0625);
  EXPECT_EQ(keys_kernel(-1.5), -0.0625);
}

TEST(Bicubic, RampDownsampleByHand) {
  // value = 4y + x; every sample lands at offset 0.5 between two pixels.
  Image ramp({1, 4, 4});
  for (std::size_t i = 0; i < 16; ++i) ramp[i] = static_cast<float>(i);
  const Image out = bicubic_resample(ramp, 2, 2);
  // per axis: 0.5625 * (x0 + x1) - 0.0625 * (x_-1 + x2), clamped at the edges
  EXPECT_FLOAT_EQ(out[0], 2.1875f);
  EXPECT_FLOAT_EQ(out[1], 4.3125f);
  EXPECT_FLOAT_EQ(out[2], 10.6875f);
  EXPECT_FLOAT_EQ(out[3], 12.8125f);
}

TEST(Bicubic, MatchesIndependentOracle) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::size_t> in_side(1, 8), out_side(1, 16);
  std::uniform_real_distribution<float> value(0.0f, 1.0f);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t h = in_side(rng), w = in_side(rng), oh = out_side(rng), ow = out_side(rng);
    Image img({3, h, w});
    for (float& v : img.data()) v = value(rng);
    const Image out = bicubic_resample(img, oh, ow);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x)
          ASSERT_NEAR(out[(c * oh + y) * ow + x], reference_pixel(img, c, y, x, oh, ow), 1e-5)
              << h << "x" << w << " -> " << oh << "x" << ow;
  }
}

TEST(Bicubic, ConstantImagesAreFixedPoints) {
  for (float c : {0.0f, 1.0f, 0.3f, -0.7f, 0.123456f, 200.0f / 255.0f}) {
    for (auto [oh, ow] : {std::pair{32, 32}, std::pair{128, 128}, std::pair{5, 11}}) {
      const Image out = bicubic_resample(Image({3, 128, 128}, c), oh, ow);
      for (float v : out.data()) ASSERT_EQ(v, c);
    }
  }
}

TEST(Bicubic, SameSizeIsIdentity) {
  std::mt19937_64 rng(3);
  const Image img = test::random_image(9, 7, rng);
  EXPECT_EQ(bicubic_resample(img, 9, 7), img);
}

TEST(Bicubic, RejectsEmptyImages) {
  EXPECT_THROW(bicubic_resample(Image({3, 0, 4}), 2, 2), Error);
  EXPECT_THROW(bicubic_resample(Image({3, 4, 4}), 0, 2), Error);
}

TEST(CenterCrop, WideImageTakesMiddleColumns) {
  std::mt19937_64 rng(4);
  const Image wide = test::random_image(128, 256, rng);
  const Image crop = center_crop_resize(wide, 128);
  ASSERT_EQ(crop.shape(), (Shape{3, 128, 128}));
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 128; ++y)
      for (std::size_t x = 0; x < 128; ++x) ASSERT_EQ(crop[(c * 128 + y) * 128 + x], wide[(c * 128 + y) * 256 + 64 + x]);
}

TEST(CenterCrop, LargerSquareIsResampled) {
  std::mt19937_64 rng(5);
  const Image big = test::random_image(256, 256, rng);
  EXPECT_EQ(center_crop_resize(big, 128), bicubic_resample(big, 128, 128));
}

TEST(Degrade, ShapesAndDeterminism) {
  std::mt19937_64 rng(6);
  const Image hr = normalize(test::random_image(128, 128, rng));
  const auto d1 = degrade(hr);
  const auto d2 = degrade(hr);
  EXPECT_EQ(d1.lr.shape(), (Shape{3, 32, 32}));
  EXPECT_EQ(d1.bhr.shape(), (Shape{3, 128, 128}));
  EXPECT_EQ(d1.lr, d2.lr);
  EXPECT_EQ(d1.bhr, d2.bhr);
  EXPECT_THROW(degrade(Image({3, 64, 64})), Error);
  EXPECT_EQ(degrade(Image({3, 64, 64}), 64).lr.shape(), (Shape{3, 16, 16}));
}

TEST(Normalize, RoundTripOnByteGrid) {
  for (int b = 0; b < 256; ++b) {
    const Image one({3, 1, 1}, from_byte(static_cast<std::uint8_t>(b)));
    const Image n = normalize(one);
    EXPECT_GE(n[0], -1.0f);
    EXPECT_LE(n[0], 1.0f);
    EXPECT_EQ(to_byte(denormalize(n)[0]), b);
  }
  EXPECT_EQ(denormalize(Image({3, 1, 1}, 1.5f))[0], 1.0f);
}

TEST(ImageIo, TinyPngDecodesToBytesOver255) {
  TempDir dir("io");
  Image img({3, 2, 2});
  const std::uint8_t bytes[12] = {0, 255, 10, 20, 30, 40, 50, 60, 70, 80, 90, 128};
  for (int i = 0; i < 12; ++i) img[i] = from_byte(bytes[i]);
  encode_png(img, dir / "tiny.png");
  const Image back = decode_image(dir / "tiny.png");
  ASSERT_EQ(back.shape(), (Shape{3, 2, 2}));
  for (int i = 0; i < 12; ++i) EXPECT_EQ(back[i], bytes[i] / 255.0f) << i;
}

TEST(ImageIo, ChannelOrderIsRgb) {
  TempDir dir("rgb");
  Image red({3, 1, 1});
  red[0] = 1.0f;
  encode_png(red, dir / "red.png");
  const Image back = decode_image(dir / "red.png");
  EXPECT_EQ(back[0], 1.0f);
  EXPECT_EQ(back[1], 0.0f);
  EXPECT_EQ(back[2], 0.0f);
}

TEST(ImageIo, Errors) {
  TempDir dir("err");
  try {
    decode_image(dir / "missing.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
    EXPECT_NE(std::string(e.what()).find("missing.png"), std::string::npos);
  }
  std::ofstream(dir / "note.txt") << "text";
  EXPECT_THROW(decode_image(dir / "note.txt"), Error);
  std::ofstream(dir / "broken.png") << "not a png";
  EXPECT_THROW(decode_image(dir / "broken.png"), Error);
}

TEST(Records, FixtureRecordSurvivesPngRoundTrip) {
  const Corpus corpus(test::fixture_dir("faces"));
  ASSERT_EQ(corpus.size(), 8u);
  for (const auto& id : corpus.ids()) {
    const PairRecord r = corpus.load(id);
    EXPECT_EQ(r.hr.shape(), (Shape{3, 128, 128}));
    TempDir dir("rec");
    encode_png(denormalize(r.hr), dir / "hr.png");
    EXPECT_EQ(normalize(decode_image(dir / "hr.png")), r.hr) << id;
    const auto d = degrade(r.hr);
    EXPECT_EQ(d.lr, r.lr);
    EXPECT_EQ(d.bhr, r.bhr);
  }
}

TEST(Corpus, DuplicateStemsAndMissingDirectory) {
  TempDir dir("dup");
  encode_png(Image({3, 4, 4}), dir / "a.png");
  std::ofstream(dir / "a.jpg") << "x";
  EXPECT_THROW(Corpus{dir.path()}, Error);
  EXPECT_THROW(Corpus{dir / "nope"}, Error);
}

TEST(Manifest, SizesFollowFloorThenRemainder) {
  std::vector<std::string> ids;
  for (int i = 0; i < 100; ++i) ids.push_back("img" + std::to_string(i));
  const auto m = build_manifest(ids, 1, parse_fractions("0.9,0.05,0.05"));
  EXPECT_EQ(m.train.size(), 90u);
  EXPECT_EQ(m.val.size(), 5u);
  EXPECT_EQ(m.test.size(), 5u);
  const auto odd = build_manifest(std::vector<std::string>(ids.begin(), ids.begin() + 7), 1, parse_fractions("0.6,0.2,0.2"));
  EXPECT_EQ(odd.val.size(), 1u);
  EXPECT_EQ(odd.test.size(), 1u);
  EXPECT_EQ(odd.train.size(), 5u);
}

TEST(Manifest, DeterministicPartition) {
  std::vector<std::string> ids;
  for (int i = 0; i < 50; ++i) ids.push_back("x" + std::to_string(i));
  const auto f = parse_fractions("0.8,0.1,0.1");
  const auto a = build_manifest(ids, 9, f);
  std::vector<std::string> reversed(ids.rbegin(), ids.rend());
  const auto b = build_manifest(reversed, 9, f);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.val, b.val);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(build_manifest(ids, 10, f).train, a.train);

  std::set<std::string> all;
  for (auto* part : {&a.train, &a.val, &a.test}) all.insert(part->begin(), part->end());
  EXPECT_EQ(all.size(), ids.size());
}

TEST(Manifest, TextRoundTrip) {
  const auto m = build_manifest(Corpus(test::fixture_dir("misc")), 3, parse_fractions("1/2,1/4,1/4"));
  const std::string text = format_manifest(m);
  EXPECT_NE(text.find("train\t"), std::string::npos);
  std::istringstream in(text);
  const auto back = parse_manifest(in);
  EXPECT_EQ(back.train, m.train);
  EXPECT_EQ(back.val, m.val);
  EXPECT_EQ(back.test, m.test);
  EXPECT_EQ(back.seed, 3u);
  EXPECT_EQ(format_manifest(back), text);
}

TEST(Manifest, RejectsBadInput) {
  EXPECT_THROW(parse_fractions("0.5,0.5"), Error);
  EXPECT_THROW(parse_fractions("0.5,0.3,0.3"), Error);
  std::istringstream bad("train img1\n");
  EXPECT_THROW(parse_manifest(bad), Error);
  std::istringstream unknown("holdout\timg1\n");
  EXPECT_THROW(parse_manifest(unknown), Error);
  TempDir dir("small");
  encode_png(Image({3, 4, 4}), dir / "a.png");
  encode_png(Image({3, 4, 4}), dir / "b.png");
  EXPECT_THROW(build_manifest(Corpus(dir.path()), 0, parse_fractions("0.9,0.05,0.05")), Error);
}

}  // namespace
}  // namespace fcgan
