#include "stfl/data/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "stfl/error.hpp"

namespace stfl {

Tensorf resize_bilinear(const Tensorf& image, std::size_t out_h, std::size_t out_w) {
  if (image.rank() != 3) throw DimensionError("resize: expected (C,H,W), got " + shape_str(image.shape()));
  if (out_h == 0 || out_w == 0) throw DimensionError("resize: output extents must be positive");
  const std::size_t C = image.dim(0), H = image.dim(1), W = image.dim(2);
  if (H == out_h && W == out_w) return image;
  struct Tap {
    std::size_t i0, i1;
    double f;
  };
  const auto taps = [](std::size_t in, std::size_t out) {
    std::vector<Tap> t(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t o = 0; o < out; ++o) {
      const double src = std::clamp((static_cast<double>(o) + 0.5) * scale - 0.5, 0.0, static_cast<double>(in - 1));
      const auto i0 = static_cast<std::size_t>(std::floor(src));
      t[o] = {i0, std::min(i0 + 1, in - 1), src - static_cast<double>(i0)};
    }
    return t;
  };
  const auto ty = taps(H, out_h);
  const auto tx = taps(W, out_w);
  Tensorf out({C, out_h, out_w});
  const float* in = image.raw();
  float* o = out.raw();
  for (std::size_t c = 0; c < C; ++c) {
    const float* plane = in + c * H * W;
    for (std::size_t y = 0; y < out_h; ++y) {
      const float* r0 = plane + ty[y].i0 * W;
      const float* r1 = plane + ty[y].i1 * W;
      const double fy = ty[y].f;
      for (std::size_t x = 0; x < out_w; ++x) {
        const double fx = tx[x].f;
        const double top = (1.0 - fx) * r0[tx[x].i0] + fx * r0[tx[x].i1];
        const double bot = (1.0 - fx) * r1[tx[x].i0] + fx * r1[tx[x].i1];
        *o++ = static_cast<float>((1.0 - fy) * top + fy * bot);
      }
    }
  }
  return out;
}

std::vector<FaceBox> read_boxes_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read boxes " + path.string());
  std::string line;
  std::size_t lineno = 0;
  std::vector<FaceBox> boxes;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line != "frame,x,y,w,h") throw DataError("boxes line 1: expected header 'frame,x,y,w,h'");
      continue;
    }
    std::istringstream row(line);
    std::string field;
    std::vector<long> v;
    try {
      while (std::getline(row, field, ',')) {
        std::size_t used = 0;
        v.push_back(std::stol(field, &used));
        if (used != field.size()) throw std::invalid_argument(field);
      }
    } catch (const std::exception&) {
      throw DataError("boxes line " + std::to_string(lineno) + ": non-integer field");
    }
    if (v.size() != 5) throw DataError("boxes line " + std::to_string(lineno) + ": expected 5 fields");
    if (v[0] != static_cast<long>(boxes.size())) {
      throw DataError("boxes line " + std::to_string(lineno) + ": expected frame " + std::to_string(boxes.size()));
    }
    boxes.push_back({v[1], v[2], v[3], v[4]});
  }
  if (boxes.empty()) throw DataError("boxes: no rows in " + path.string());
  return boxes;
}

Tensorf crop_faces(const Tensorf& frames, const std::vector<FaceBox>& boxes, std::size_t out_size) {
  if (frames.rank() != 4 || frames.dim(1) != 3) {
    throw DimensionError("crop_faces: expected (T,3,H,W) frames, got " + shape_str(frames.shape()));
  }
  const std::size_t T = frames.dim(0), H = frames.dim(2), W = frames.dim(3);
  if (boxes.size() != T) {
    throw DataError("crop_faces: " + std::to_string(boxes.size()) + " boxes for " + std::to_string(T) + " frames");
  }
  if (out_size == 0) throw DataError("crop_faces: out_size must be positive");
  Tensorf out({T, 3, out_size, out_size});
  for (std::size_t t = 0; t < T; ++t) {
    const FaceBox& b = boxes[t];
    if (b.w <= 0 || b.h <= 0) throw DataError("crop_faces: frame " + std::to_string(t) + ": box has zero area");
    if (b.x < 0 || b.y < 0 || b.x + b.w > static_cast<long>(W) || b.y + b.h > static_cast<long>(H)) {
      throw DataError("crop_faces: frame " + std::to_string(t) + ": box (" + std::to_string(b.x) + "," +
                      std::to_string(b.y) + "," + std::to_string(b.w) + "," + std::to_string(b.h) +
                      ") exceeds frame " + std::to_string(W) + "x" + std::to_string(H));
    }
    const auto bw = static_cast<std::size_t>(b.w), bh = static_cast<std::size_t>(b.h);
    Tensorf crop({3, bh, bw});
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < bh; ++y)
        for (std::size_t x = 0; x < bw; ++x)
          crop.at(c, y, x) = frames.at(t, c, static_cast<std::size_t>(b.y) + y, static_cast<std::size_t>(b.x) + x);
    const Tensorf r = resize_bilinear(crop, out_size, out_size);
    std::copy(r.data().begin(), r.data().end(), out.data().begin() + static_cast<long>(t * r.numel()));
  }
  return out;
}

Tensorf frames_to_clip(const Tensorf& frames) {
  if (frames.rank() != 4) throw DimensionError("frames_to_clip: expected (T,C,H,W), got " + shape_str(frames.shape()));
  const std::size_t T = frames.dim(0), C = frames.dim(1), HW = frames.dim(2) * frames.dim(3);
  Tensorf clip({C, T, frames.dim(2), frames.dim(3)});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t c = 0; c < C; ++c)
      std::copy_n(frames.raw() + (t * C + c) * HW, HW, clip.raw() + (c * T + t) * HW);
  return clip;
}

Tensorf clip_to_frames(const Tensorf& clip) {
  if (clip.rank() != 4) throw DimensionError("clip_to_frames: expected (C,T,H,W), got " + shape_str(clip.shape()));
  const std::size_t C = clip.dim(0), T = clip.dim(1), HW = clip.dim(2) * clip.dim(3);
  Tensorf frames({T, C, clip.dim(2), clip.dim(3)});
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t t = 0; t < T; ++t)
      std::copy_n(clip.raw() + (c * T + t) * HW, HW, frames.raw() + (t * C + c) * HW);
  return frames;
}

Tensorf clip_frame(const Tensorf& clip, std::size_t t) {
  if (clip.rank() != 4 || t >= clip.dim(1)) throw DimensionError("clip_frame: frame index out of range");
  const std::size_t C = clip.dim(0), T = clip.dim(1), HW = clip.dim(2) * clip.dim(3);
  Tensorf frame({C, clip.dim(2), clip.dim(3)});
  for (std::size_t c = 0; c < C; ++c) std::copy_n(clip.raw() + (c * T + t) * HW, HW, frame.raw() + c * HW);
  return frame;
}

namespace {

std::string ppm_token(std::istream& in) {
  std::string tok;
  while (in >> tok) {
    if (tok[0] != '#') return tok;
    std::string rest;
    std::getline(in, rest);
  }
  return {};
}

}  // namespace

Tensorf read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read image " + path.string());
  const auto bad = [&](const std::string& what) { return FormatError(path.string() + ": " + what); };
  if (ppm_token(in) != "P6") throw bad("expected binary PPM (P6) magic at byte 0");
  long w = 0, h = 0, maxval = 0;
  try {
    w = std::stol(ppm_token(in));
    h = std::stol(ppm_token(in));
    maxval = std::stol(ppm_token(in));
  } catch (const std::exception&) {
    throw bad("malformed header");
  }
  if (w <= 0 || h <= 0 || maxval != 255) throw bad("unsupported header (need positive size, maxval 255)");
  in.get();
  const auto H = static_cast<std::size_t>(h), W = static_cast<std::size_t>(w);
  std::vector<unsigned char> px(H * W * 3);
  in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (in.gcount() != static_cast<std::streamsize>(px.size())) {
    throw bad("truncated pixel data at byte " + std::to_string(static_cast<long>(in.gcount())) + " of payload");
  }
  Tensorf img({3, H, W});
  for (std::size_t i = 0; i < H * W; ++i)
    for (std::size_t c = 0; c < 3; ++c) img[c * H * W + i] = static_cast<float>(px[i * 3 + c]) / 255.0f;
  return img;
}

void write_ppm(const std::filesystem::path& path, const Tensorf& image) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw DimensionError("write_ppm: expected (3,H,W), got " + shape_str(image.shape()));
  }
  const std::size_t H = image.dim(1), W = image.dim(2);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image " + path.string());
  out << "P6\n" << W << ' ' << H << "\n255\n";
  std::vector<unsigned char> px(H * W * 3);
  for (std::size_t i = 0; i < H * W; ++i)
    for (std::size_t c = 0; c < 3; ++c) {
      const float v = std::clamp(image[c * H * W + i], 0.0f, 1.0f);
      px[i * 3 + c] = static_cast<unsigned char>(std::lround(v * 255.0f));
    }
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (!out) throw IoError("failed writing image " + path.string());
}

Tensorf read_frames_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".ppm") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no .ppm frames in " + dir.string());
  const Tensorf first = read_ppm(files[0]);
  Tensorf frames({files.size(), 3, first.dim(1), first.dim(2)});
  for (std::size_t t = 0; t < files.size(); ++t) {
    const Tensorf f = t == 0 ? first : read_ppm(files[t]);
    if (f.shape() != first.shape()) {
      throw DataError("frame " + files[t].filename().string() + " has size " + shape_str(f.shape()) +
                      ", expected " + shape_str(first.shape()));
    }
    std::copy(f.data().begin(), f.data().end(), frames.data().begin() + static_cast<long>(t * f.numel()));
  }
  return frames;
}

}  // namespace stfl
