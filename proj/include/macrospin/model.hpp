// model.hpp: physical parameters, state types and unit conventions
#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

namespace macrospin {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Bad user input (parameters, grid specs, configuration)
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct MacrospinState {
    double x{0.0}, y{0.0}, z{0.0};

    double norm() const noexcept { return std::sqrt(x * x + y * y + z * z); }
    bool finite() const noexcept { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
    double operator[](int i) const noexcept { return i == 0 ? x : (i == 1 ? y : z); }

    friend MacrospinState operator+(MacrospinState a, const MacrospinState& b) noexcept {
        return {a.x + b.x, a.y + b.y, a.z + b.z};
    }
    friend MacrospinState operator-(MacrospinState a, const MacrospinState& b) noexcept {
        return {a.x - b.x, a.y - b.y, a.z - b.z};
    }
    friend MacrospinState operator*(double s, const MacrospinState& a) noexcept {
        return {s * a.x, s * a.y, s * a.z};
    }
    friend bool operator==(const MacrospinState&, const MacrospinState&) = default;
};

inline double max_abs_diff(const MacrospinState& a, const MacrospinState& b) noexcept {
    return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.z - b.z)});
}

// Polar angle theta in [0, pi], azimuth phi in [0, 2 pi)
struct SphericalAngle {
    double theta{0.0};
    double phi{0.0};
};

inline void validate(const SphericalAngle& a) {
    if (!(a.theta >= 0.0 && a.theta <= std::numbers::pi))
        throw ValidationError("SphericalAngle: theta must lie in [0, pi]");
    if (!(a.phi >= 0.0 && a.phi < two_pi))
        throw ValidationError("SphericalAngle: phi must lie in [0, 2 pi)");
}

inline MacrospinState angle_to_vector(const SphericalAngle& a) noexcept {
    const double s = std::sin(a.theta);
    return {s * std::cos(a.phi), s * std::sin(a.phi), std::cos(a.theta)};
}

// Inverse of angle_to_vector for nonzero vectors; phi wrapped into [0, 2 pi)
inline SphericalAngle vector_to_angle(const MacrospinState& m) {
    const double r = m.norm();
    if (r == 0.0) throw ValidationError("vector_to_angle: zero vector has no direction");
    const double theta = std::acos(std::clamp(m.z / r, -1.0, 1.0));
    double phi = std::atan2(m.y, m.x);
    if (phi < 0.0) phi += two_pi;
    if (phi >= two_pi) phi = 0.0;
    return {theta, phi};
}

struct ModelParams {
    double gamma{0.0};
    double omega{two_pi};
    double kappa{0.0};
    std::array<double, 3> j{0.0, 0.0, 0.0};
    int n_spins{1};

    double period() const noexcept { return two_pi / omega; }
};

inline void validate(const ModelParams& p) {
    if (!(p.gamma >= 0.0) || !std::isfinite(p.gamma)) throw ValidationError("gamma must be finite and >= 0");
    if (!(p.omega > 0.0) || !std::isfinite(p.omega)) throw ValidationError("omega must be finite and > 0");
    if (!(p.kappa >= 0.0) || !std::isfinite(p.kappa)) throw ValidationError("kappa must be finite and >= 0");
    for (double v : p.j)
        if (!std::isfinite(v)) throw ValidationError("interaction constants must be finite");
    if (p.n_spins < 1) throw ValidationError("n_spins must be >= 1");
}

// Flat key-value section, e.g. one [params] block of a configuration file
using ConfigSection = std::map<std::string, std::string>;

inline std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline double parse_double(const std::string& key, const std::string& text) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &pos);
    } catch (const std::exception&) {
        throw ValidationError("key '" + key + "': expected a number, got '" + text + "'");
    }
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos != text.size()) throw ValidationError("key '" + key + "': trailing characters in '" + text + "'");
    return v;
}

inline int parse_int(const std::string& key, const std::string& text) {
    const double v = parse_double(key, text);
    if (v != std::floor(v) || std::abs(v) > 1e9)
        throw ValidationError("key '" + key + "': expected an integer, got '" + text + "'");
    return static_cast<int>(v);
}

inline ConfigSection to_section(const ModelParams& p) {
    return {{"gamma", format_double(p.gamma)}, {"omega", format_double(p.omega)},
            {"kappa", format_double(p.kappa)}, {"jx", format_double(p.j[0])},
            {"jy", format_double(p.j[1])},     {"jz", format_double(p.j[2])},
            {"n_spins", std::to_string(p.n_spins)}};
}

// Missing keys keep the defaults of `base`; unknown keys are rejected
inline ModelParams params_from_section(const ConfigSection& s, ModelParams base = {}) {
    for (const auto& [k, v] : s) {
        if (k == "gamma") base.gamma = parse_double(k, v);
        else if (k == "omega") base.omega = parse_double(k, v);
        else if (k == "kappa") base.kappa = parse_double(k, v);
        else if (k == "jx") base.j[0] = parse_double(k, v);
        else if (k == "jy") base.j[1] = parse_double(k, v);
        else if (k == "jz") base.j[2] = parse_double(k, v);
        else if (k == "n_spins") base.n_spins = parse_int(k, v);
        else throw ValidationError("unknown parameter key '" + k + "'");
    }
    validate(base);
    return base;
}

}  // namespace macrospin
