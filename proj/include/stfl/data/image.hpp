#pragma once

// Frame-level image operations. Frames are (3,H,W) float tensors in [0,1];
// frame stacks are (T,3,H,W) and clips are (3,T,H,W).

#include <cstddef>
#include <filesystem>
#include <vector>

#include "stfl/tensor.hpp"

namespace stfl {

/// Half-pixel-centred bilinear resampling of a (C,H,W) image with edge clamping.
Tensorf resize_bilinear(const Tensorf& image, std::size_t out_h, std::size_t out_w);

struct FaceBox {
  long x = 0;
  long y = 0;
  long w = 0;
  long h = 0;
};

/// CSV with header `frame,x,y,w,h`, rows ordered by frame index from 0.
std::vector<FaceBox> read_boxes_csv(const std::filesystem::path& path);

/// Crops every frame to its box and resizes it to out_size x out_size.
/// Boxes are used as given, without smoothing across frames. DataError names
/// the frame whose box is empty or leaves the image.
Tensorf crop_faces(const Tensorf& frames, const std::vector<FaceBox>& boxes, std::size_t out_size = 256);

/// (T,3,H,W) <-> (3,T,H,W).
Tensorf frames_to_clip(const Tensorf& frames);
Tensorf clip_to_frames(const Tensorf& clip);
/// Frame t of a (3,T,H,W) clip as (3,H,W).
Tensorf clip_frame(const Tensorf& clip, std::size_t t);

/// Binary PPM (P6, maxval 255).
Tensorf read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Tensorf& image);

/// Loads every *.ppm file of a directory in lexicographic order as (T,3,H,W).
Tensorf read_frames_dir(const std::filesystem::path& dir);

}  // namespace stfl
