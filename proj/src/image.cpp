#include "pcdhv/image.hpp"

#include <algorithm>
#include <fstream>

namespace pcdhv {

namespace {

int read_token(std::istream& is) {
    // skip whitespace and '#' comments between header tokens
    while (true) {
        const int c = is.peek();
        if (c == '#') {
            std::string line;
            std::getline(is, line);
        } else if (std::isspace(c)) {
            is.get();
        } else {
            break;
        }
    }
    int v = 0;
    is >> v;
    return v;
}

}  // namespace

Tensor read_ppm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open image: " + path);
    std::string magic;
    is >> magic;
    if (magic != "P6") throw std::runtime_error("not a binary PPM (P6): " + path);
    const int w = read_token(is);
    const int h = read_token(is);
    const int maxval = read_token(is);
    if (w < 1 || h < 1 || maxval != 255) throw std::runtime_error("unsupported PPM header: " + path);
    is.get();  // single whitespace after header
    std::vector<unsigned char> raw(static_cast<size_t>(w) * h * 3);
    is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!is) throw std::runtime_error("truncated PPM: " + path);
    Tensor img({h, w, 3});
    for (size_t i = 0; i < raw.size(); ++i) img.data[i] = static_cast<Real>(raw[i]) / Real(255);
    return img;
}

void write_ppm(const std::string& path, const Tensor& image) {
    if (image.rank() != 3 || image.dims[2] != 3) throw ShapeError("write_ppm: H x W x 3 required");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os << "P6\n" << image.dims[1] << " " << image.dims[0] << "\n255\n";
    std::vector<unsigned char> raw(image.data.size());
    for (size_t i = 0; i < raw.size(); ++i) {
        const Real v = std::min(Real(1), std::max(Real(0), image.data[i]));
        raw[i] = static_cast<unsigned char>(v * Real(255) + Real(0.5));
    }
    os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!os) throw std::runtime_error("write failed: " + path);
}

void write_pgm(const std::string& path, const Tensor& map) {
    if (map.rank() < 2) throw ShapeError("write_pgm: rank-2 or single-channel rank-3 required");
    if (map.rank() == 3 && map.dims[2] != 1) throw ShapeError("write_pgm: single channel required");
    const int h = map.dims[0], w = map.dims[1];
    Real lo = map.data[0], hi = map.data[0];
    for (Real v : map.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const Real range = hi > lo ? hi - lo : Real(1);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os << "P5\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> raw(map.data.size());
    for (size_t i = 0; i < raw.size(); ++i)
        raw[i] = static_cast<unsigned char>((map.data[i] - lo) / range * Real(255) + Real(0.5));
    os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace pcdhv
