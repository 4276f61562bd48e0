#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

namespace ctrvis {

inline constexpr std::size_t kFeatureCount = 43;

/// 43 named feature slots. Slot k (0-based) holds feature f(k+1). A slot whose
/// value came from a degenerate-input convention has defined[k] == false; the
/// value itself is still finite so the vector stays dense for the learners.
struct FeatureVector {
    std::array<double, kFeatureCount> values{};
    std::array<bool, kFeatureCount> defined{};

    FeatureVector() { defined.fill(true); }

    /// 1-based accessors matching the f1..f43 naming.
    double& f(int n) { return values[static_cast<std::size_t>(n - 1)]; }
    double f(int n) const { return values[static_cast<std::size_t>(n - 1)]; }
    void set(int n, double v, bool is_defined = true) {
        values[static_cast<std::size_t>(n - 1)] = v;
        defined[static_cast<std::size_t>(n - 1)] = is_defined;
    }
    bool is_defined(int n) const { return defined[static_cast<std::size_t>(n - 1)]; }
};

/// "f1" .. "f43".
std::string feature_name(int n);
std::string_view feature_description(int n);

/// Slots holding non-negative integer counts / ranks.
bool is_count_feature(int n) noexcept;
/// Slots constrained to [0, 1].
bool is_ratio_feature(int n) noexcept;

struct ThresholdConfig {
    double c1 = 0.01;              // gray dominant bins, relative to the tallest bin
    double c2 = 0.01;              // color dominant bins, relative to the tallest bin
    double c4_frac = 0.01;         // minimum coherent component size, fraction of |I|
    double c5 = 0.01;              // dominant hue bins, fraction of |I|
    double c6 = 0.01;              // segment dominant hue bins
    double sat_val_floor = 0.2;    // hue histograms ignore pixels below this S or V
    double harmony_rotation_step = 1.0;  // degrees

    void validate() const;
    /// Canonical text used for fingerprinting extraction configurations.
    std::string canonical() const;
};

}  // namespace ctrvis
