#include "oce/core/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace oce {

void write_pgm(const Image &img, const std::filesystem::path &path, double lo, double hi) {
    if (!(hi > lo)) throw DomainError("write_pgm: empty display range");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << "P5\n" << img.cols() << " " << img.rows() << "\n255\n";
    std::vector<unsigned char> row(img.cols());
    for (std::size_t r = 0; r < img.rows(); ++r) {
        for (std::size_t c = 0; c < img.cols(); ++c) {
            const double t = std::clamp((img(r, c) - lo) / (hi - lo), 0.0, 1.0);
            row[c] = static_cast<unsigned char>(std::lround(t * 255.0));
        }
        out.write(reinterpret_cast<const char *>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

} // namespace oce
