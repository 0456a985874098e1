#include "pfl/imaging.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <random>

#include "pfl/error.hpp"
#include "pfl/parallel.hpp"

namespace pfl::imaging {

namespace {

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Counter-based generator: output n is a hash of (key, n), so each pixel owns an
// independent stream regardless of traversal order.
class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_(mix64(seed + 0x9E3779B97F4A7C15ULL * (mix64(stream) | 1ULL))) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() { return mix64(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

std::vector<double> gaussian_kernel(double sigma_samples) {
    const auto half = static_cast<std::ptrdiff_t>(std::ceil(5.0 * sigma_samples));
    std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
    double total = 0.0;
    for (std::ptrdiff_t i = -half; i <= half; ++i) {
        const double x = static_cast<double>(i) / sigma_samples;
        const double v = std::exp(-0.5 * x * x);
        kernel[static_cast<std::size_t>(i + half)] = v;
        total += v;
    }
    for (double& v : kernel) v /= total;
    return kernel;
}

// Convolves rows (axis 0) or columns (axis 1) of a side x side grid; zero outside.
void convolve_axis(std::vector<double>& grid, std::size_t side, const std::vector<double>& kernel,
                   bool along_rows) {
    const auto half = static_cast<std::ptrdiff_t>(kernel.size() / 2);
    const auto n = static_cast<std::ptrdiff_t>(side);
    std::vector<double> line(side);
    std::vector<double> out(side);
    for (std::ptrdiff_t a = 0; a < n; ++a) {
        for (std::ptrdiff_t b = 0; b < n; ++b) {
            line[static_cast<std::size_t>(b)] =
                along_rows ? grid[static_cast<std::size_t>(a * n + b)] : grid[static_cast<std::size_t>(b * n + a)];
        }
        for (std::ptrdiff_t b = 0; b < n; ++b) {
            double s = 0.0;
            const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, b - half);
            const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, b + half);
            for (std::ptrdiff_t c = lo; c <= hi; ++c) {
                s += kernel[static_cast<std::size_t>(b - c + half)] * line[static_cast<std::size_t>(c)];
            }
            out[static_cast<std::size_t>(b)] = s;
        }
        for (std::ptrdiff_t b = 0; b < n; ++b) {
            if (along_rows) {
                grid[static_cast<std::size_t>(a * n + b)] = out[static_cast<std::size_t>(b)];
            } else {
                grid[static_cast<std::size_t>(b * n + a)] = out[static_cast<std::size_t>(b)];
            }
        }
    }
}

}  // namespace

void ImagingSystem::validate() const {
    require_positive(magnification, "magnification");
    if (!std::isfinite(magnification_uncertainty) || magnification_uncertainty < 0.0) {
        throw Error(ErrorKind::invalid_parameter, "magnification_uncertainty must be >= 0");
    }
    if (!(collection_fraction > 0.0 && collection_fraction < 1.0)) {
        throw Error(ErrorKind::invalid_parameter, "collection_fraction must lie in (0, 1)");
    }
}

void CcdModel::validate() const {
    require_positive(pixel_pitch, "pixel_pitch");
    if (width == 0 || height == 0) throw Error(ErrorKind::invalid_parameter, "empty CCD array");
    if (!(quantum_efficiency > 0.0 && quantum_efficiency <= 1.0)) {
        throw Error(ErrorKind::invalid_parameter, "quantum_efficiency must lie in (0, 1]");
    }
    for (double v : {read_noise, dark_rate, background_rate}) {
        if (!std::isfinite(v) || v < 0.0) {
            throw Error(ErrorKind::invalid_parameter, "noise rates must be finite and >= 0");
        }
    }
    require_positive(gain, "gain");
    if (saturation <= 0) throw Error(ErrorKind::invalid_parameter, "saturation must be > 0");
}

optics::Psf effective_image_psf(const ImagingSystem& system, const trap::IonScene& scene) {
    system.validate();
    scene.validate();
    const double m = system.magnification;
    const optics::Psf object = system.psf.plane() == optics::ReferencePlane::object
                                   ? system.psf
                                   : system.psf.scaled(1.0 / m, optics::ReferencePlane::object);
    const double pitch = object.pitch();
    const double sx = scene.motion_rms[0] / pitch;
    const double sy = scene.motion_rms[1] / pitch;
    const bool blur_x = sx >= 0.5;
    const bool blur_y = sy >= 0.5;

    const auto margin = static_cast<std::size_t>(std::ceil(5.0 * std::max(blur_x ? sx : 0.0, blur_y ? sy : 0.0)));
    const auto core = static_cast<std::size_t>(std::floor(object.extent() / pitch + 1e-9));
    const std::size_t half = core + margin;
    const std::size_t side = 2 * half + 1;

    std::vector<double> grid(side * side);
    for (std::size_t i = 0; i < side; ++i) {
        const double y = (static_cast<double>(i) - static_cast<double>(half)) * pitch;
        for (std::size_t j = 0; j < side; ++j) {
            const double x = (static_cast<double>(j) - static_cast<double>(half)) * pitch;
            grid[i * side + j] = object.value(x, y);
        }
    }
    if (blur_x) convolve_axis(grid, side, gaussian_kernel(sx), true);
    if (blur_y) convolve_axis(grid, side, gaussian_kernel(sy), false);

    return optics::Psf::cartesian(std::move(grid), side, pitch, optics::ReferencePlane::object)
        .scaled(m, optics::ReferencePlane::image);
}

std::pair<double, double> pixel_position(const trap::Vec3& object, double magnification,
                                         const CcdModel& ccd) {
    const double cx = 0.5 * static_cast<double>(ccd.width - 1);
    const double cy = 0.5 * static_cast<double>(ccd.height - 1);
    return {cx + image_coordinate(object[0], magnification) / ccd.pixel_pitch,
            cy + image_coordinate(object[1], magnification) / ccd.pixel_pitch};
}

CcdFrame render_frame(const ImagingSystem& system, const trap::IonScene& scene,
                      const CcdModel& ccd, double exposure, double photon_rate, std::uint64_t seed,
                      const RenderOptions& options) {
    ccd.validate();
    require_positive(exposure, "exposure");
    require_finite(photon_rate, "photon_rate");
    if (photon_rate < 0.0) throw Error(ErrorKind::invalid_parameter, "photon_rate must be >= 0");

    const optics::Psf psf = effective_image_psf(system, scene);
    const std::size_t w = ccd.width;
    const std::size_t h = ccd.height;
    const double p = ccd.pixel_pitch;

    std::vector<double> signal(w * h, 0.0);  // photoelectrons
    const double electrons_per_ion =
        photon_rate * exposure * system.collection_fraction * ccd.quantum_efficiency;

    constexpr int sub = 4;
    const double sub_area = (p / sub) * (p / sub);
    for (const auto& ion : scene.positions) {
        const auto [px, py] = pixel_position(ion, system.magnification, ccd);
        const auto reach = static_cast<std::ptrdiff_t>(std::ceil(psf.extent() / p)) + 1;
        const auto cx = static_cast<std::ptrdiff_t>(std::lround(px));
        const auto cy = static_cast<std::ptrdiff_t>(std::lround(py));
        const std::size_t span = static_cast<std::size_t>(2 * reach + 1);

        // Pixel integrals over the whole support, including pixels off the array, so
        // the quadrature can be normalized to the unit PSF integral.
        std::vector<double> weight(span * span, 0.0);
        double total = 0.0;
        for (std::size_t a = 0; a < span; ++a) {
            const double row = static_cast<double>(cy - reach + static_cast<std::ptrdiff_t>(a));
            for (std::size_t b = 0; b < span; ++b) {
                const double col = static_cast<double>(cx - reach + static_cast<std::ptrdiff_t>(b));
                double s = 0.0;
                for (int u = 0; u < sub; ++u) {
                    const double y = (row - py + (u + 0.5) / sub - 0.5) * p;
                    for (int v = 0; v < sub; ++v) {
                        const double x = (col - px + (v + 0.5) / sub - 0.5) * p;
                        s += psf.value(x, y);
                    }
                }
                weight[a * span + b] = s * sub_area;
                total += s * sub_area;
            }
        }
        if (!(total > 0.0)) continue;
        for (std::size_t a = 0; a < span; ++a) {
            const std::ptrdiff_t row = cy - reach + static_cast<std::ptrdiff_t>(a);
            if (row < 0 || row >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t b = 0; b < span; ++b) {
                const std::ptrdiff_t col = cx - reach + static_cast<std::ptrdiff_t>(b);
                if (col < 0 || col >= static_cast<std::ptrdiff_t>(w)) continue;
                signal[static_cast<std::size_t>(row) * w + static_cast<std::size_t>(col)] +=
                    electrons_per_ion * weight[a * span + b] / total;
            }
        }
    }

    CcdFrame frame;
    frame.width = w;
    frame.height = h;
    frame.exposure = exposure;
    frame.seed = seed;
    frame.counts.resize(w * h);
    frame.expected.resize(w * h);

    const double sky = ccd.background_rate * exposure;
    const double dark = ccd.dark_rate * exposure;
    const double sat = static_cast<double>(ccd.saturation);
    std::size_t saturated = 0;
    for (std::size_t i = 0; i < w * h; ++i) {
        frame.expected[i] = (signal[i] + sky + dark) / ccd.gain;
        if (frame.expected[i] > sat) ++saturated;
    }
    frame.saturation_warning = static_cast<double>(saturated) > 0.01 * static_cast<double>(w * h);

    parallel_for(h, options.threads, [&](std::size_t row) {
        for (std::size_t col = 0; col < w; ++col) {
            const std::size_t i = row * w + col;
            double electrons = 0.0;
            if (!options.noise) {
                electrons = frame.expected[i] * ccd.gain;
            } else {
                CounterRng rng(seed, i);
                const double photo_mean = signal[i] + sky;
                if (photo_mean > 0.0) {
                    electrons += static_cast<double>(std::poisson_distribution<std::int64_t>(photo_mean)(rng));
                }
                if (dark > 0.0) {
                    electrons += static_cast<double>(std::poisson_distribution<std::int64_t>(dark)(rng));
                }
                if (ccd.read_noise > 0.0) {
                    electrons += std::normal_distribution<double>(0.0, ccd.read_noise)(rng);
                }
            }
            const double counts = std::clamp(std::round(electrons / ccd.gain), 0.0, sat);
            frame.counts[i] = static_cast<std::int32_t>(counts);
        }
    });
    return frame;
}

trap::IonScene displace_scene(const trap::IonScene& scene, const trap::Vec3& delta) {
    trap::IonScene out = scene;
    for (auto& p : out.positions) {
        for (std::size_t a = 0; a < 3; ++a) p[a] += delta[a];
    }
    return out;
}

void write_frame_csv(std::ostream& out, const CcdFrame& frame) {
    for (std::size_t row = 0; row < frame.height; ++row) {
        for (std::size_t col = 0; col < frame.width; ++col) {
            if (col) out << ',';
            out << frame.at(col, row);
        }
        out << '\n';
    }
}

CcdFrame read_frame_csv(std::istream& in) {
    CcdFrame frame;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t cols = 0;
        std::size_t pos = 0;
        while (true) {
            const std::size_t comma = line.find(',', pos);
            const std::string cell = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            ++cols;
            std::size_t used = 0;
            long long value = 0;
            bool ok = !cell.empty();
            if (ok) {
                try {
                    value = std::stoll(cell, &used);
                } catch (const std::exception&) {
                    ok = false;
                }
            }
            if (!ok || used != cell.size() || value < 0 || value > std::numeric_limits<std::int32_t>::max()) {
                throw Error(ErrorKind::parse, "frame CSV: bad value '" + cell + "' at line " +
                                                  std::to_string(line_no) + ", column " +
                                                  std::to_string(cols));
            }
            frame.counts.push_back(static_cast<std::int32_t>(value));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (frame.width == 0) {
            frame.width = cols;
        } else if (cols != frame.width) {
            throw Error(ErrorKind::parse, "frame CSV: line " + std::to_string(line_no) + " has " +
                                              std::to_string(cols) + " columns, expected " +
                                              std::to_string(frame.width));
        }
        ++frame.height;
    }
    if (frame.width == 0 || frame.height == 0) {
        throw Error(ErrorKind::parse, "frame CSV: no data");
    }
    return frame;
}

void write_frame_png(const std::string& path, const CcdFrame& frame) {
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!file) throw Error(ErrorKind::io, "cannot open " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorKind::io, "libpng initialisation failed");
    }
    std::vector<png_byte> row(frame.width * 2);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorKind::io, "libpng failed writing " + path);
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(frame.width),
                 static_cast<png_uint_32>(frame.height), 16, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t r = 0; r < frame.height; ++r) {
        for (std::size_t c = 0; c < frame.width; ++c) {
            const auto v = static_cast<std::uint16_t>(std::clamp(frame.at(c, r), 0, 65535));
            row[2 * c] = static_cast<png_byte>(v >> 8);  // PNG is big-endian
            row[2 * c + 1] = static_cast<png_byte>(v & 0xFF);
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace pfl::imaging
