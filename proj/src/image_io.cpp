#include "semadv/image_io.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace semadv {

namespace {

uint8_t quantize(float v) {
    const float b = std::round((v + 1.0f) / 2.0f * 255.0f);
    return static_cast<uint8_t>(std::min(255.0f, std::max(0.0f, b)));
}

float dequantize(uint8_t b) { return static_cast<float>(b) / 255.0f * 2.0f - 1.0f; }

int read_pnm_int(std::istream& is) {
    // skips whitespace and '#' comments without consuming the delimiter after the number
    int c = is.peek();
    while (c != EOF && (std::isspace(c) || c == '#')) {
        is.get();
        if (c == '#')
            while ((c = is.get()) != EOF && c != '\n') {
            }
        c = is.peek();
    }
    if (c == EOF || !std::isdigit(c)) throw std::runtime_error("image: malformed header");
    int v = 0;
    while ((c = is.peek()) != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        is.get();
    }
    return v;
}

}  // namespace

void write_image(const Tensor& x, const std::string& path) {
    if (x.shape().size() != 3) throw std::invalid_argument("write_image: expected CxHxW tensor");
    const int c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    if (c != 1 && c != 3) throw std::invalid_argument("write_image: channels must be 1 or 3");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("write_image: cannot open '" + path + "'");
    os << (c == 3 ? "P6" : "P5") << "\n" << w << " " << h << "\n255\n";
    const float* px = x.data();
    std::vector<uint8_t> row(static_cast<size_t>(w) * c);
    for (int y = 0; y < h; ++y) {
        for (int xx = 0; xx < w; ++xx)
            for (int cc = 0; cc < c; ++cc) row[static_cast<size_t>(xx) * c + cc] = quantize(px[(cc * h + y) * w + xx]);
        os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!os) throw std::runtime_error("write_image: write failed for '" + path + "'");
}

Tensor read_image(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_image: cannot open '" + path + "'");
    char p, kind;
    is.get(p);
    is.get(kind);
    if (p != 'P' || (kind != '5' && kind != '6')) throw std::runtime_error("read_image: malformed header in '" + path + "'");
    const int c = kind == '6' ? 3 : 1;
    const int w = read_pnm_int(is);
    const int h = read_pnm_int(is);
    const int maxval = read_pnm_int(is);
    if (w < 1 || h < 1 || maxval != 255) throw std::runtime_error("read_image: unsupported header in '" + path + "'");
    const int sep = is.get();  // exactly one whitespace byte before the binary payload
    if (!std::isspace(sep)) throw std::runtime_error("read_image: malformed header in '" + path + "'");

    std::vector<uint8_t> bytes(static_cast<size_t>(w) * h * c);
    if (!is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size())))
        throw std::runtime_error("read_image: truncated payload in '" + path + "'");

    Tensor x = Tensor::zeros({c, h, w});
    float* px = x.data();
    for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx)
            for (int cc = 0; cc < c; ++cc)
                px[(cc * h + y) * w + xx] = dequantize(bytes[(static_cast<size_t>(y) * w + xx) * c + cc]);
    return x;
}

Tensor quantize_roundtrip(const Tensor& x) {
    Tensor out = x.detached_clone();
    for (auto& v : out.values()) v = dequantize(quantize(v));
    return out;
}

Tensor to_grayscale(const Tensor& x) {
    if (x.shape().size() != 3) throw std::invalid_argument("to_grayscale: expected CxHxW tensor");
    const int c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    if (c == 1) return x.detached_clone();
    Tensor g = Tensor::zeros({1, h, w});
    const float* px = x.data();
    float* pg = g.data();
    for (int i = 0; i < h * w; ++i) {
        float acc = 0;
        for (int cc = 0; cc < c; ++cc) acc += px[cc * h * w + i];
        pg[i] = acc / static_cast<float>(c);
    }
    return g;
}

}  // namespace semadv
