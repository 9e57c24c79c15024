#include "adaptire/mf_adapt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "adaptire/error.hpp"
#include "adaptire/keyvalue.hpp"

namespace adaptire {

ClampedConditions clamp_to_valid_box(const TireConditions& cond) {
    if (!std::isfinite(cond.pressure) || !std::isfinite(cond.treadDepth) ||
        !std::isfinite(cond.surfaceTemperature) || !std::isfinite(cond.normalLoad)) {
        throw InvalidInput("tire conditions must be finite");
    }
    if (cond.normalLoad <= 0.0) {
        throw InvalidInput("tire normal load must be positive");
    }
    ClampedConditions out{cond, false};
    auto clampField = [&out](double& v, double lo, double hi) {
        const double c = std::clamp(v, lo, hi);
        if (c != v) {
            out.clamped = true;
            v = c;
        }
    };
    clampField(out.conditions.pressure, ConditionBox::minPressure, ConditionBox::maxPressure);
    clampField(out.conditions.treadDepth, ConditionBox::minTread, ConditionBox::maxTread);
    clampField(out.conditions.surfaceTemperature, ConditionBox::minTemperature, ConditionBox::maxTemperature);
    return out;
}

AdaptedMfCoefficients identity_tree(const BaseMfCoefficients& base, const TireConditions& reference) {
    AdaptedMfCoefficients t;
    t.amplitude = {Quadratic{}, Quadratic{}, Quadratic{0, 0, base.a3}};
    t.loadTerm = {Quadratic{}, Quadratic{0, 0, base.a4}};
    t.stiffnessTemp = Quadratic{0, 0, 1.0};
    t.gripLoad = Quadratic{0, 0, base.a1};
    t.gripLevel = Linear{0, base.a2};
    t.gripTemp = Quadratic{0, 0, 1.0};
    t.shapeC = base.shapeC;
    t.curvatureE = base.curvatureE;
    t.offsetSv = base.offsetSv;
    t.reference = reference;
    return t;
}

NormalizedConditions normalize(const AdaptedMfCoefficients& coeffs, const TireConditions& cond) {
    const auto& ref = coeffs.reference;
    return {(cond.pressure - ref.pressure) / ref.pressure, (cond.treadDepth - ref.treadDepth) / ref.treadDepth,
            (cond.surfaceTemperature - ref.surfaceTemperature) / coeffs.temperatureSpan};
}

TireConditions denormalize(const AdaptedMfCoefficients& coeffs, const NormalizedConditions& n, double normalLoad) {
    const auto& ref = coeffs.reference;
    return {ref.pressure * (1.0 + n.x), ref.treadDepth * (1.0 + n.y),
            ref.surfaceTemperature + n.z * coeffs.temperatureSpan, normalLoad};
}

double stiffness_amplitude(const AdaptedMfCoefficients& c, const NormalizedConditions& n) {
    return (c.amplitude[0](n.y) * n.x + c.amplitude[1](n.y)) * n.x + c.amplitude[2](n.y);
}

double stiffness_load_term(const AdaptedMfCoefficients& c, const NormalizedConditions& n) {
    return c.loadTerm[0](n.y) * n.x + c.loadTerm[1](n.y);
}

namespace {

struct StiffnessParts {
    double amplitude;
    double load;
    double temp;
};

StiffnessParts stiffness_parts(const AdaptedMfCoefficients& c, const NormalizedConditions& n) {
    StiffnessParts p{stiffness_amplitude(c, n), stiffness_load_term(c, n), c.stiffnessTemp(n.z)};
    if (!(p.load > 0.0)) {
        throw CoefficientError("cornering-stiffness load term is non-positive at these conditions");
    }
    if (!(p.temp > 0.0)) {
        throw CoefficientError("cornering-stiffness temperature factor is non-positive at these conditions");
    }
    if (!(p.amplitude > 0.0)) {
        throw CoefficientError("cornering-stiffness amplitude is non-positive at these conditions");
    }
    return p;
}

}  // namespace

double adapted_cornering_stiffness(const AdaptedMfCoefficients& coeffs, const TireConditions& cond) {
    const auto clamped = clamp_to_valid_box(cond).conditions;
    const auto n = normalize(coeffs, clamped);
    const auto p = stiffness_parts(coeffs, n);
    return p.amplitude * std::sin(2.0 * std::atan(clamped.normalLoad / p.load)) * p.temp;
}

double adapted_peak_friction(const AdaptedMfCoefficients& coeffs, const TireConditions& cond) {
    const auto clamped = clamp_to_valid_box(cond).conditions;
    const auto n = normalize(coeffs, clamped);
    const double mu =
        (coeffs.gripLoad(n.y) * clamped.normalLoad + coeffs.gripLevel(n.y)) * coeffs.gripTemp(n.z);
    if (!(mu > 0.0)) {
        throw CoefficientError("adapted peak friction is non-positive at these conditions");
    }
    return mu;
}

BaseMfCoefficients to_base_coefficients(const AdaptedMfCoefficients& coeffs, const TireConditions& cond) {
    const auto clamped = clamp_to_valid_box(cond).conditions;
    const auto n = normalize(coeffs, clamped);
    const auto p = stiffness_parts(coeffs, n);
    const double gripScale = coeffs.gripTemp(n.z);
    if (!(gripScale > 0.0)) {
        throw CoefficientError("peak-grip temperature factor is non-positive at these conditions");
    }
    BaseMfCoefficients base;
    base.a3 = p.amplitude * p.temp;
    base.a4 = p.load;
    base.a1 = coeffs.gripLoad(n.y) * gripScale;
    base.a2 = coeffs.gripLevel(n.y) * gripScale;
    base.shapeC = coeffs.shapeC;
    base.curvatureE = coeffs.curvatureE;
    base.offsetSv = coeffs.offsetSv;
    if (!(base.a2 > 0.0)) {
        throw CoefficientError("adapted friction level is non-positive at these conditions");
    }
    return base;
}

void validate_over_box(const AdaptedMfCoefficients& coeffs) {
    constexpr int steps = 16;
    for (int i = 0; i <= steps; ++i) {
        for (int j = 0; j <= steps; ++j) {
            TireConditions cond = coeffs.reference;
            cond.pressure = ConditionBox::minPressure +
                            (ConditionBox::maxPressure - ConditionBox::minPressure) * i / steps;
            cond.treadDepth = ConditionBox::minTread + (ConditionBox::maxTread - ConditionBox::minTread) * j / steps;
            const auto n = normalize(coeffs, cond);
            if (!(stiffness_amplitude(coeffs, n) > 0.0)) {
                throw CoefficientError("amplitude term non-positive inside the valid box");
            }
            if (!(stiffness_load_term(coeffs, n) > 0.0)) {
                throw CoefficientError("load term non-positive inside the valid box");
            }
        }
    }
    for (int k = 0; k <= 4 * steps; ++k) {
        TireConditions cond = coeffs.reference;
        cond.surfaceTemperature = ConditionBox::minTemperature +
                                  (ConditionBox::maxTemperature - ConditionBox::minTemperature) * k / (4 * steps);
        const auto n = normalize(coeffs, cond);
        if (!(coeffs.stiffnessTemp(n.z) > 0.0) || !(coeffs.gripTemp(n.z) > 0.0)) {
            throw CoefficientError("temperature polynomial non-positive inside the valid box");
        }
    }
}

namespace {

constexpr std::array<const char*, 3> kAmplitudeNames[3] = {
    {"a311", "a312", "a313"}, {"a321", "a322", "a323"}, {"a331", "a332", "a333"}};
constexpr std::array<const char*, 3> kLoadNames[2] = {{"a411", "a412", "a413"}, {"a421", "a422", "a423"}};

void put(KeyValueDocument& doc, const std::string& section, const std::array<const char*, 3>& names,
         const Quadratic& q) {
    doc.set(section + "." + names[0], q.c2);
    doc.set(section + "." + names[1], q.c1);
    doc.set(section + "." + names[2], q.c0);
}

Quadratic get(const KeyValueDocument& doc, const std::string& section, const std::array<const char*, 3>& names) {
    return {doc.number(section + "." + names[0]), doc.number(section + "." + names[1]),
            doc.number(section + "." + names[2])};
}

constexpr std::array<const char*, 3> kTempNames = {"b11", "b12", "b13"};

}  // namespace

void write_tree(std::ostream& out, const AdaptedMfCoefficients& c) {
    KeyValueDocument doc;
    for (int i = 0; i < 3; ++i) {
        put(doc, "stiffness", kAmplitudeNames[i], c.amplitude[i]);
    }
    for (int i = 0; i < 2; ++i) {
        put(doc, "stiffness", kLoadNames[i], c.loadTerm[i]);
    }
    put(doc, "stiffness", kTempNames, c.stiffnessTemp);
    put(doc, "grip", {"a11", "a12", "a13"}, c.gripLoad);
    doc.set("grip.a21", c.gripLevel.c1);
    doc.set("grip.a22", c.gripLevel.c0);
    put(doc, "grip", kTempNames, c.gripTemp);
    doc.set("shape.C", c.shapeC);
    doc.set("shape.E", c.curvatureE);
    doc.set("shape.Sv", c.offsetSv);
    doc.set("reference.pressure_kpa", c.reference.pressure);
    doc.set("reference.tread_depth_mm", c.reference.treadDepth);
    doc.set("reference.surface_temp_c", c.reference.surfaceTemperature);
    doc.set("reference.normal_load_n", c.reference.normalLoad);
    doc.set("reference.temperature_span_k", c.temperatureSpan);
    out << "# adapted Magic Formula coefficient tree\n"
        << "# x = (p - p_ref)/p_ref, y = (d - d_ref)/d_ref, z = (T - T_ref)/temperature_span_k\n";
    doc.write(out);
}

AdaptedMfCoefficients read_tree(std::istream& in) {
    const auto doc = KeyValueDocument::parse(in, "tire tree");
    AdaptedMfCoefficients c;
    for (int i = 0; i < 3; ++i) {
        c.amplitude[i] = get(doc, "stiffness", kAmplitudeNames[i]);
    }
    for (int i = 0; i < 2; ++i) {
        c.loadTerm[i] = get(doc, "stiffness", kLoadNames[i]);
    }
    c.stiffnessTemp = get(doc, "stiffness", kTempNames);
    c.gripLoad = get(doc, "grip", {"a11", "a12", "a13"});
    c.gripLevel = {doc.number("grip.a21"), doc.number("grip.a22")};
    c.gripTemp = get(doc, "grip", kTempNames);
    c.shapeC = doc.number("shape.C");
    c.curvatureE = doc.number("shape.E");
    c.offsetSv = doc.number("shape.Sv");
    c.reference.pressure = doc.number("reference.pressure_kpa");
    c.reference.treadDepth = doc.number("reference.tread_depth_mm");
    c.reference.surfaceTemperature = doc.number("reference.surface_temp_c");
    c.reference.normalLoad = doc.number("reference.normal_load_n");
    c.temperatureSpan = doc.number("reference.temperature_span_k");
    if (!(c.reference.pressure > 0.0) || !(c.reference.treadDepth > 0.0) || !(c.temperatureSpan > 0.0) ||
        !(c.reference.normalLoad > 0.0)) {
        throw InvalidInput("tire tree: reference pressure, tread depth, load and temperature span must be positive");
    }
    return c;
}

void save_tree(const std::string& path, const AdaptedMfCoefficients& coeffs) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path);
    }
    write_tree(out, coeffs);
}

AdaptedMfCoefficients load_tree(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    return read_tree(in);
}

}  // namespace adaptire
