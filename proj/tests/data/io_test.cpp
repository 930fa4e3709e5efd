#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "stfl/data/clip_io.hpp"
#include "stfl/data/image.hpp"
#include "stfl/error.hpp"
#include "test_util.hpp"

using namespace stfl;
using stfl::testing::random_tensor;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "stfl_io_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(ClipIo, RoundTripIsBitExact) {
  const Tensorf clip = random_tensor<float>({3, 16, 32, 32}, 1, 0.0, 1.0);
  write_clip(scratch("a.clpt"), clip);
  const Tensorf back = read_clip(scratch("a.clpt"));
  EXPECT_EQ(back.shape(), clip.shape());
  EXPECT_TRUE(back == clip);
}

TEST(ClipIo, HeaderDimsGivePayloadLength) {
  const auto bytes = encode_clip(Tensorf({3, 16, 32, 32}));
  EXPECT_EQ(bytes.size(), kClipHeaderBytes + 49152u * 4u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "CLPT");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 0);
  EXPECT_EQ(bytes[10], 16);
}

TEST(ClipIo, TruncatedPayloadIsFormatError) {
  auto bytes = encode_clip(Tensorf({3, 2, 4, 4}, 0.5f));
  bytes.pop_back();
  try {
    (void)decode_clip(bytes);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("byte 22"), std::string::npos) << e.what();
  }
  bytes.resize(9);
  EXPECT_THROW((void)decode_clip(bytes), FormatError);
}

TEST(ClipIo, BadMagicAndChannels) {
  auto bytes = encode_clip(Tensorf({3, 1, 2, 2}));
  bytes[0] = 'X';
  EXPECT_THROW((void)decode_clip(bytes), FormatError);
  EXPECT_THROW((void)encode_clip(Tensorf({4, 1, 2, 2})), DimensionError);
  auto four = encode_clip(Tensorf({3, 1, 2, 2}));
  four[6] = 4;
  EXPECT_THROW((void)decode_clip(four), FormatError);
}

TEST(ClipIo, MissingFileIsIoError) { EXPECT_THROW((void)read_clip(scratch("nope.clpt")), IoError); }

TEST(Resize, IdentityAndConstant) {
  const Tensorf img = random_tensor<float>({3, 5, 7}, 2);
  EXPECT_TRUE(resize_bilinear(img, 5, 7) == img);
  const Tensorf c = resize_bilinear(Tensorf({3, 9, 6}, 0.25f), 4, 13);
  for (float v : c.data()) EXPECT_NEAR(v, 0.25f, 1e-7);
}

TEST(Resize, HalvingCheckerboardAveragesFourPixels) {
  Tensorf img({3, 4, 4});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 4; ++y)
      for (std::size_t x = 0; x < 4; ++x) img.at(c, y, x) = static_cast<float>((x + y) % 2) * 0.5f + 0.1f * c + 0.01f * y * x;
  const Tensorf out = resize_bilinear(img, 2, 2);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 2; ++y)
      for (std::size_t x = 0; x < 2; ++x) {
        const double avg = (img.at(c, 2 * y, 2 * x) + img.at(c, 2 * y, 2 * x + 1) + img.at(c, 2 * y + 1, 2 * x) +
                            img.at(c, 2 * y + 1, 2 * x + 1)) /
                           4.0;
        EXPECT_NEAR(out.at(c, y, x), avg, 1e-6);
      }
}

TEST(Resize, UpsampledRampStaysLinearInInterior) {
  Tensorf img({3, 1, 4});
  for (std::size_t x = 0; x < 4; ++x)
    for (std::size_t c = 0; c < 3; ++c) img.at(c, 0, x) = static_cast<float>(x);
  const Tensorf out = resize_bilinear(img, 1, 8);
  // Output pixel o samples source coordinate (o + 0.5) / 2 - 0.5.
  for (std::size_t o = 1; o < 7; ++o) EXPECT_NEAR(out.at(0, 0, o), (o + 0.5) / 2.0 - 0.5, 1e-6);
  EXPECT_EQ(out.at(0, 0, 0), 0.0f);
  EXPECT_EQ(out.at(0, 0, 7), 3.0f);
}

TEST(CropFaces, FullFrameBoxIsIdentity) {
  const Tensorf frames = random_tensor<float>({3, 3, 8, 8}, 3, 0.0, 1.0);
  const std::vector<FaceBox> boxes(3, FaceBox{0, 0, 8, 8});
  EXPECT_TRUE(crop_faces(frames, boxes, 8) == frames);
}

TEST(CropFaces, EachFrameUsesItsOwnBox) {
  Tensorf frames({2, 3, 6, 6});
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < 6; ++y)
        for (std::size_t x = 0; x < 6; ++x) frames.at(t, c, y, x) = static_cast<float>(y * 6 + x);
  const std::vector<FaceBox> boxes{{1, 2, 2, 2}, {3, 0, 2, 2}};
  const Tensorf out = crop_faces(frames, boxes, 2);
  EXPECT_EQ(out.at(0, 0, 0, 0), 13.0f);
  EXPECT_EQ(out.at(0, 1, 1, 1), 20.0f);
  EXPECT_EQ(out.at(1, 2, 0, 0), 3.0f);
  EXPECT_EQ(out.at(1, 0, 1, 0), 9.0f);
}

TEST(CropFaces, BadBoxNamesFrame) {
  const Tensorf frames({3, 3, 8, 8});
  std::vector<FaceBox> boxes(3, FaceBox{0, 0, 4, 4});
  boxes[2] = {6, 0, 4, 4};
  try {
    (void)crop_faces(frames, boxes, 4);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("frame 2"), std::string::npos) << e.what();
  }
  boxes[2] = {1, 1, 0, 3};
  EXPECT_THROW((void)crop_faces(frames, boxes, 4), DataError);
  boxes.pop_back();
  EXPECT_THROW((void)crop_faces(frames, boxes, 4), DataError);
}

TEST(Boxes, CsvParse) {
  const auto path = scratch("boxes.csv");
  {
    std::ofstream out(path);
    out << "frame,x,y,w,h\n0,1,2,3,4\n1,5,6,7,8\n";
  }
  const auto b = read_boxes_csv(path);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b[1].x, 5);
  EXPECT_EQ(b[1].h, 8);
  {
    std::ofstream out(path);
    out << "frame,x,y,w,h\n0,1,2,3,4\n2,5,6,7,8\n";
  }
  EXPECT_THROW((void)read_boxes_csv(path), DataError);
}

TEST(Layout, FramesClipTransposeRoundTrip) {
  const Tensorf frames = random_tensor<float>({4, 3, 2, 5}, 4);
  const Tensorf clip = frames_to_clip(frames);
  EXPECT_EQ(clip.shape(), (Shape{3, 4, 2, 5}));
  EXPECT_EQ(clip.at(2, 3, 1, 4), frames.at(3, 2, 1, 4));
  EXPECT_TRUE(clip_to_frames(clip) == frames);
  const Tensorf f1 = clip_frame(clip, 1);
  EXPECT_EQ(f1.at(1, 0, 2), frames.at(1, 1, 0, 2));
}

TEST(Ppm, FramesDirectoryRoundTrip) {
  const auto dir = scratch("frames");
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const Tensorf frames = random_tensor<float>({3, 3, 5, 6}, 5, 0.0, 1.0);
  for (std::size_t t = 0; t < 3; ++t) {
    Tensorf f({3, 5, 6});
    std::copy_n(frames.raw() + t * f.numel(), f.numel(), f.raw());
    write_ppm(dir / ("f" + std::to_string(t) + ".ppm"), f);
  }
  const Tensorf back = read_frames_dir(dir);
  ASSERT_EQ(back.shape(), frames.shape());
  for (std::size_t i = 0; i < back.numel(); ++i) EXPECT_NEAR(back[i], frames[i], 0.5 / 255.0 + 1e-7);
}

TEST(Ppm, RejectsOtherFormats) {
  const auto path = scratch("bad.ppm");
  {
    std::ofstream out(path);
    out << "P3\n1 1\n255\n0 0 0\n";
  }
  EXPECT_THROW((void)read_ppm(path), FormatError);
  {
    std::ofstream out(path, std::ios::binary);
    out << "P6\n2 2\n255\n" << std::string(5, 'x');
  }
  EXPECT_THROW((void)read_ppm(path), FormatError);
}
