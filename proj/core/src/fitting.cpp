#include "adaptire/fitting.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "adaptire/error.hpp"

namespace adaptire {

const char* to_string(FitStage stage) {
    switch (stage) {
        case FitStage::BaseAtCondition: return "base-at-condition";
        case FitStage::PressureTree: return "pressure-tree";
        case FitStage::PressureTreadTree: return "pressure-tread-tree";
        case FitStage::TemperaturePoly: return "temperature-poly";
        case FitStage::GripTree: return "grip-tree";
        case FitStage::JointRefinement: return "joint-refinement";
    }
    return "unknown";
}

namespace {

std::string describe(const SweepObservation& o) {
    std::ostringstream s;
    s << "slip=" << o.slipAngle << " rad, Fz=" << o.normalLoad << " N, p=" << o.pressure << " kPa, d=" << o.treadDepth
      << " mm, T=" << o.surfaceTemperature << " C, Fy=" << o.lateralForce << " N";
    return s.str();
}

/// MF lateral force without the throwing guards; used inside residuals where the solver may probe
/// non-physical coefficient combinations.
double mf_force_unchecked(const BaseMfCoefficients& c, double alpha, double fz) {
    const double mu = std::max(c.a1 * fz + c.a2, 1e-9);
    const double peak = mu * fz;
    const double bcd = c.a3 * std::sin(2.0 * std::atan(fz / c.a4));
    const double b = bcd / (c.shapeC * peak);
    const double ba = b * alpha;
    const double phi = ba - c.curvatureE * (ba - std::atan(ba));
    return peak * std::sin(c.shapeC * std::atan(phi)) + c.offsetSv;
}

/// Least-squares polynomial fit, coefficients returned lowest power first.
std::vector<double> polyfit(const std::vector<double>& xs, const std::vector<double>& ys, int degree) {
    const auto m = static_cast<Eigen::Index>(xs.size());
    Eigen::MatrixXd v(m, degree + 1);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        double pw = 1.0;
        for (int k = 0; k <= degree; ++k) {
            v(i, k) = pw;
            pw *= xs[static_cast<std::size_t>(i)];
        }
        rhs(i) = ys[static_cast<std::size_t>(i)];
    }
    const Eigen::VectorXd c = v.colPivHouseholderQr().solve(rhs);
    return {c.data(), c.data() + c.size()};
}

double polyval(const std::vector<double>& c, double x) {
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) {
        acc = acc * x + *it;
    }
    return acc;
}

Quadratic to_quadratic(const std::vector<double>& c) { return {c.at(2), c.at(1), c.at(0)}; }

double rms(const std::vector<double>& r) {
    if (r.empty()) {
        return 0.0;
    }
    const double ss = std::inner_product(r.begin(), r.end(), r.begin(), 0.0);
    return std::sqrt(ss / static_cast<double>(r.size()));
}

std::map<ConditionKey, std::vector<SweepObservation>> group_by_condition(std::span<const SweepObservation> obs) {
    std::map<ConditionKey, std::vector<SweepObservation>> groups;
    for (const auto& o : obs) {
        groups[{o.pressure, o.treadDepth, o.surfaceTemperature}].push_back(o);
    }
    return groups;
}

[[noreturn]] void under_sampled(const std::string& axis, std::size_t found, std::size_t needed,
                                const std::string& where = {}) {
    throw FitError(axis + " axis under-sampled: found " + std::to_string(found) + " distinct value(s)" +
                   (where.empty() ? "" : " " + where) + ", need " + std::to_string(needed));
}

std::string condition_label(const ConditionKey& k) {
    std::ostringstream s;
    s << "at (p=" << k.pressure << " kPa, d=" << k.treadDepth << " mm, T=" << k.surfaceTemperature << " C)";
    return s.str();
}

}  // namespace

double predicted_lateral_force(const AdaptedMfCoefficients& tree, const SweepObservation& obs) {
    const auto base = to_base_coefficients(tree, obs.conditions());
    return lateral_force(base, {obs.slipAngle, obs.normalLoad});
}

double force_rms(const AdaptedMfCoefficients& tree, std::span<const SweepObservation> observations) {
    std::vector<double> r;
    r.reserve(observations.size());
    for (const auto& o : observations) {
        r.push_back(predicted_lateral_force(tree, o) - o.lateralForce);
    }
    return rms(r);
}

FitResult nlls_solve(const FitProblem& problem, const ObservationResidualFunction& residualFn,
                     const LeastSquaresOptions& options) {
    const auto& obs = problem.observations;
    for (const auto& o : obs) {
        const bool finite = std::isfinite(o.slipAngle) && std::isfinite(o.normalLoad) && std::isfinite(o.pressure) &&
                            std::isfinite(o.treadDepth) && std::isfinite(o.surfaceTemperature) &&
                            std::isfinite(o.lateralForce);
        if (!finite || o.normalLoad <= 0.0) {
            throw FitError("invalid observation (" + describe(o) + ")");
        }
        if (clamp_to_valid_box(o.conditions()).clamped) {
            throw FitError("observation outside the valid condition box (" + describe(o) + ")");
        }
    }
    if (obs.size() < 2 * problem.initialGuess.size()) {
        throw FitError(std::string(to_string(problem.stage)) + ": " + std::to_string(obs.size()) +
                       " observations for " + std::to_string(problem.initialGuess.size()) +
                       " coefficients; need at least twice as many");
    }
    const std::size_t per = std::max<std::size_t>(problem.residualsPerObservation, 1);

    LeastSquaresProblem lsq;
    lsq.residualCount = obs.size() * per;
    lsq.initialGuess = problem.initialGuess;
    lsq.lower = problem.lower;
    lsq.upper = problem.upper;
    lsq.typicalScale = problem.typicalScale;
    lsq.parameterNames = problem.names;
    lsq.residuals = [&](std::span<const double> params, std::span<double> out) {
        residualFn(obs, params, out);
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (!std::isfinite(out[i])) {
                throw FitError("non-finite residual for observation " + std::to_string(i / per) + " (" +
                               describe(obs[i / per]) + ")");
            }
        }
    };
    const auto r = solve_least_squares(lsq, options);
    FitResult fr;
    fr.coefficients = r.parameters;
    fr.residualRms = r.residualRms;
    fr.iterations = r.iterations;
    fr.converged = r.converged;
    fr.gradientNorm = r.gradientNorm;
    fr.termination = r.termination;
    fr.covarianceDiagonal = r.covarianceDiagonal;
    fr.acceptedCosts = r.acceptedCosts;
    return fr;
}

// ---------------------------------------------------------------------------
// Stage 1

std::vector<ConditionFit> fit_condition_sweeps(std::span<const SweepObservation> observations,
                                               const LeastSquaresOptions& options) {
    if (observations.empty()) {
        throw FitError("no observations");
    }
    std::vector<ConditionFit> fits;
    for (const auto& [key, group] : group_by_condition(observations)) {
        std::map<double, std::vector<const SweepObservation*>> byLoad;
        for (const auto& o : group) {
            byLoad[o.normalLoad].push_back(&o);
        }
        if (byLoad.size() < 4) {
            under_sampled("normal-load", byLoad.size(), 4, condition_label(key));
        }

        // Initial guess: small-slip slope per load, a3 = max slope, a4 = load at that slope;
        // friction from max |Fy| / Fz per load, linear in load.
        double bestSlope = 0.0;
        double loadAtBest = byLoad.rbegin()->first;
        std::vector<double> loads;
        std::vector<double> mus;
        for (const auto& [fz, pts] : byLoad) {
            std::vector<const SweepObservation*> sorted = pts;
            std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
                return std::abs(a->slipAngle) < std::abs(b->slipAngle);
            });
            const std::size_t nearCount = std::min<std::size_t>(3, sorted.size());
            double sxy = 0.0;
            double sxx = 0.0;
            for (std::size_t i = 0; i < nearCount; ++i) {
                sxy += sorted[i]->slipAngle * sorted[i]->lateralForce;
                sxx += sorted[i]->slipAngle * sorted[i]->slipAngle;
            }
            const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
            if (slope > bestSlope) {
                bestSlope = slope;
                loadAtBest = fz;
            }
            double peak = 0.0;
            for (const auto* o : pts) {
                peak = std::max(peak, std::abs(o->lateralForce));
            }
            loads.push_back(fz);
            mus.push_back(peak / fz);
        }
        const auto muLine = polyfit(loads, mus, 1);
        double a1Guess = std::min(muLine[1], -1e-7);
        double a2Guess = std::max(muLine[0], 0.1);
        const double a3Guess = bestSlope > 0.0 ? 1.05 * bestSlope : 50000.0;
        const double a4Guess = loadAtBest;

        FitProblem problem;
        problem.observations = group;
        problem.stage = FitStage::BaseAtCondition;
        problem.initialGuess = {a1Guess, a2Guess, a3Guess, a4Guess, 1.3, -1.0};
        problem.lower = {-1e-3, 1e-3, 1.0, 1.0, 1.0, -10.0};
        problem.upper = {0.0, 5.0, 1e7, 1e6, 2.0, 1.0};
        problem.typicalScale = {1e-5, 1.0, a3Guess, a4Guess, 1.0, 1.0};
        problem.names = {"a1", "a2", "a3", "a4", "C", "E"};

        auto residual = [](std::span<const SweepObservation> os, std::span<const double> c, std::span<double> out) {
            BaseMfCoefficients b;
            b.a1 = c[0];
            b.a2 = c[1];
            b.a3 = c[2];
            b.a4 = c[3];
            b.shapeC = c[4];
            b.curvatureE = c[5];
            for (std::size_t i = 0; i < os.size(); ++i) {
                out[i] = mf_force_unchecked(b, os[i].slipAngle, os[i].normalLoad) - os[i].lateralForce;
            }
        };
        ConditionFit cf;
        cf.key = key;
        cf.observationCount = group.size();
        cf.fit = nlls_solve(problem, residual, options);
        const auto& c = cf.fit.coefficients;
        cf.coefficients.a1 = c[0];
        cf.coefficients.a2 = c[1];
        cf.coefficients.a3 = c[2];
        cf.coefficients.a4 = c[3];
        cf.coefficients.shapeC = c[4];
        cf.coefficients.curvatureE = c[5];
        cf.coefficients.offsetSv = 0.0;
        fits.push_back(std::move(cf));
    }
    return fits;
}

// ---------------------------------------------------------------------------
// Stages 2-3

std::vector<StiffnessTreeLevel> fit_stiffness_levels(std::span<const ConditionFit> fits,
                                                     const TireConditions& reference) {
    std::map<double, std::map<double, std::vector<const ConditionFit*>>> byTempTread;
    std::set<double> pressures;
    for (const auto& f : fits) {
        byTempTread[f.key.surfaceTemperature][f.key.treadDepth].push_back(&f);
        pressures.insert(f.key.pressure);
    }
    if (pressures.size() < 3) {
        under_sampled("pressure", pressures.size(), 3);
    }
    std::vector<StiffnessTreeLevel> levels;
    for (const auto& [temp, byTread] : byTempTread) {
        if (byTread.size() < 3) {
            under_sampled("tread-depth", byTread.size(), 3, "at T=" + std::to_string(temp) + " C");
        }
        std::vector<double> ys;
        std::array<std::vector<double>, 3> ampCoef;  // x^2, x, 1
        std::array<std::vector<double>, 2> loadCoef; // x, 1
        std::vector<double> pressureResid;
        for (const auto& [tread, group] : byTread) {
            if (group.size() < 3) {
                under_sampled("pressure", group.size(), 3,
                              "at d=" + std::to_string(tread) + " mm, T=" + std::to_string(temp) + " C");
            }
            std::vector<double> xs;
            std::vector<double> a3s;
            std::vector<double> a4s;
            for (const auto* f : group) {
                xs.push_back((f->key.pressure - reference.pressure) / reference.pressure);
                a3s.push_back(f->coefficients.a3);
                a4s.push_back(f->coefficients.a4);
            }
            const auto q = polyfit(xs, a3s, 2);
            const auto l = polyfit(xs, a4s, 1);
            for (std::size_t i = 0; i < xs.size(); ++i) {
                pressureResid.push_back(polyval(q, xs[i]) - a3s[i]);
            }
            ys.push_back((tread - reference.treadDepth) / reference.treadDepth);
            ampCoef[0].push_back(q[2]);
            ampCoef[1].push_back(q[1]);
            ampCoef[2].push_back(q[0]);
            loadCoef[0].push_back(l[1]);
            loadCoef[1].push_back(l[0]);
        }
        StiffnessTreeLevel level;
        level.surfaceTemperature = temp;
        level.pressureStageRms = rms(pressureResid);
        std::vector<double> treadResid;
        for (int i = 0; i < 3; ++i) {
            const auto c = polyfit(ys, ampCoef[static_cast<std::size_t>(i)], 2);
            level.amplitude[static_cast<std::size_t>(i)] = to_quadratic(c);
            for (std::size_t k = 0; k < ys.size(); ++k) {
                treadResid.push_back(polyval(c, ys[k]) - ampCoef[static_cast<std::size_t>(i)][k]);
            }
        }
        for (int i = 0; i < 2; ++i) {
            level.loadTerm[static_cast<std::size_t>(i)] = to_quadratic(polyfit(ys, loadCoef[static_cast<std::size_t>(i)], 2));
        }
        level.treadStageRms = rms(treadResid);
        levels.push_back(level);
    }
    return levels;
}

std::vector<GripTreeLevel> fit_grip_levels(std::span<const ConditionFit> fits, const TireConditions& reference) {
    std::map<double, std::vector<const ConditionFit*>> byTemp;
    for (const auto& f : fits) {
        byTemp[f.key.surfaceTemperature].push_back(&f);
    }
    std::vector<GripTreeLevel> levels;
    for (const auto& [temp, group] : byTemp) {
        std::set<double> treads;
        std::vector<double> ys;
        std::vector<double> a1s;
        std::vector<double> a2s;
        for (const auto* f : group) {
            treads.insert(f->key.treadDepth);
            ys.push_back((f->key.treadDepth - reference.treadDepth) / reference.treadDepth);
            a1s.push_back(f->coefficients.a1);
            a2s.push_back(f->coefficients.a2);
        }
        if (treads.size() < 3) {
            under_sampled("tread-depth", treads.size(), 3, "at T=" + std::to_string(temp) + " C");
        }
        const auto c1 = polyfit(ys, a1s, 2);
        const auto c2 = polyfit(ys, a2s, 1);
        GripTreeLevel level;
        level.surfaceTemperature = temp;
        level.gripLoad = to_quadratic(c1);
        level.gripLevel = {c2[1], c2[0]};
        std::vector<double> resid;
        for (std::size_t i = 0; i < ys.size(); ++i) {
            const double muFit = polyval(c1, ys[i]) * reference.normalLoad + polyval(c2, ys[i]);
            resid.push_back(muFit - (a1s[i] * reference.normalLoad + a2s[i]));
        }
        level.rms = rms(resid);
        levels.push_back(level);
    }
    return levels;
}

// ---------------------------------------------------------------------------
// Stage 4

namespace {

Quadratic scaled(const Quadratic& q, double s) { return {q.c2 * s, q.c1 * s, q.c0 * s}; }
Quadratic sum(const Quadratic& a, const Quadratic& b) { return {a.c2 + b.c2, a.c1 + b.c1, a.c0 + b.c0}; }

}  // namespace

AdaptedMfCoefficients fit_temperature_stage(std::span<const ConditionFit> fits,
                                            std::span<const StiffnessTreeLevel> stiffness,
                                            std::span<const GripTreeLevel> grip, const TireConditions& reference,
                                            double temperatureSpan, std::vector<StageSummary>* summaries) {
    if (stiffness.size() < 3 || grip.size() < 3) {
        under_sampled("temperature", std::min(stiffness.size(), grip.size()), 3);
    }
    if (stiffness.size() != grip.size()) {
        throw FitError("stiffness and grip stages disagree on temperature levels");
    }
    auto zOf = [&](double temp) { return (temp - reference.surfaceTemperature) / temperatureSpan; };

    // Anchor level: the one closest to the reference temperature.
    std::size_t anchor = 0;
    for (std::size_t i = 1; i < stiffness.size(); ++i) {
        if (std::abs(stiffness[i].surfaceTemperature - reference.surfaceTemperature) <
            std::abs(stiffness[anchor].surfaceTemperature - reference.surfaceTemperature)) {
            anchor = i;
        }
    }
    AdaptedMfCoefficients anchorTree;
    anchorTree.reference = reference;
    anchorTree.temperatureSpan = temperatureSpan;
    anchorTree.amplitude = stiffness[anchor].amplitude;
    anchorTree.loadTerm = stiffness[anchor].loadTerm;
    anchorTree.gripLoad = grip[anchor].gripLoad;
    anchorTree.gripLevel = grip[anchor].gripLevel;

    // Per-level scale factors relative to the anchor, from the stage-1 coefficients.
    std::vector<double> zs;
    std::vector<double> stiffScale;
    std::vector<double> gripScale;
    for (std::size_t lvl = 0; lvl < stiffness.size(); ++lvl) {
        const double temp = stiffness[lvl].surfaceTemperature;
        double sNum = 0.0, sDen = 0.0, gNum = 0.0, gDen = 0.0;
        for (const auto& f : fits) {
            if (f.key.surfaceTemperature != temp) {
                continue;
            }
            const auto n = normalize(anchorTree, {f.key.pressure, f.key.treadDepth, temp, 1.0});
            const double amp = stiffness_amplitude(anchorTree, n);
            sNum += f.coefficients.a3 * amp;
            sDen += amp * amp;
            const double muAnchor = anchorTree.gripLoad(n.y) * reference.normalLoad + anchorTree.gripLevel(n.y);
            const double muObs = f.coefficients.a1 * reference.normalLoad + f.coefficients.a2;
            gNum += muObs * muAnchor;
            gDen += muAnchor * muAnchor;
        }
        if (!(sDen > 0.0) || !(gDen > 0.0)) {
            throw FitError("temperature stage: empty level at T=" + std::to_string(temp) + " C");
        }
        zs.push_back(zOf(temp));
        stiffScale.push_back(sNum / sDen);
        gripScale.push_back(gNum / gDen);
    }
    const auto qs = polyfit(zs, stiffScale, 2);
    const auto qg = polyfit(zs, gripScale, 2);
    const double qs0 = polyval(qs, 0.0);
    const double qg0 = polyval(qg, 0.0);
    if (!(qs0 > 0.0) || !(qg0 > 0.0)) {
        throw FitError("temperature stage: fitted scale is non-positive at the reference temperature");
    }

    AdaptedMfCoefficients tree = anchorTree;
    tree.stiffnessTemp = scaled(to_quadratic(qs), 1.0 / qs0);
    tree.gripTemp = scaled(to_quadratic(qg), 1.0 / qg0);

    // Fold every level into the reference-temperature tree.
    std::array<Quadratic, 3> amp{};
    std::array<Quadratic, 2> load{};
    Quadratic gLoad{};
    Quadratic gLevel{};
    const double levels = static_cast<double>(stiffness.size());
    for (std::size_t lvl = 0; lvl < stiffness.size(); ++lvl) {
        const double ks = qs0 / polyval(qs, zs[lvl]) / levels;
        const double kg = qg0 / polyval(qg, zs[lvl]) / levels;
        for (std::size_t i = 0; i < 3; ++i) {
            amp[i] = sum(amp[i], scaled(stiffness[lvl].amplitude[i], ks));
        }
        for (std::size_t i = 0; i < 2; ++i) {
            load[i] = sum(load[i], scaled(stiffness[lvl].loadTerm[i], 1.0 / levels));
        }
        gLoad = sum(gLoad, scaled(grip[lvl].gripLoad, kg));
        gLevel = sum(gLevel, scaled(Quadratic{0.0, grip[lvl].gripLevel.c1, grip[lvl].gripLevel.c0}, kg));
    }
    tree.amplitude = amp;
    tree.loadTerm = load;
    tree.gripLoad = gLoad;
    tree.gripLevel = {gLevel.c1, gLevel.c0};

    double sumC = 0.0;
    double sumE = 0.0;
    for (const auto& f : fits) {
        sumC += f.coefficients.shapeC;
        sumE += f.coefficients.curvatureE;
    }
    tree.shapeC = sumC / static_cast<double>(fits.size());
    tree.curvatureE = sumE / static_cast<double>(fits.size());
    tree.offsetSv = 0.0;

    if (summaries != nullptr) {
        std::vector<double> stiffResid;
        std::vector<double> gripResid;
        for (const auto& f : fits) {
            const TireConditions c{f.key.pressure, f.key.treadDepth, f.key.surfaceTemperature, 1.0};
            const auto n = normalize(tree, c);
            stiffResid.push_back(stiffness_amplitude(tree, n) * tree.stiffnessTemp(n.z) - f.coefficients.a3);
            const double mu = (tree.gripLoad(n.y) * reference.normalLoad + tree.gripLevel(n.y)) * tree.gripTemp(n.z);
            gripResid.push_back(mu - (f.coefficients.a1 * reference.normalLoad + f.coefficients.a2));
        }
        summaries->push_back({FitStage::TemperaturePoly, rms(stiffResid), true,
                              "a3 residual after temperature folding [N/rad]"});
        summaries->push_back({FitStage::GripTree, rms(gripResid), true, "mu at nominal load residual [-]"});
    }
    return tree;
}

// ---------------------------------------------------------------------------
// Joint refinement

namespace {

constexpr std::size_t kJointParams = 26;

std::vector<double> pack(const AdaptedMfCoefficients& t) {
    std::vector<double> p;
    p.reserve(kJointParams);
    for (const auto& q : t.amplitude) {
        p.insert(p.end(), {q.c2, q.c1, q.c0});
    }
    for (const auto& q : t.loadTerm) {
        p.insert(p.end(), {q.c2, q.c1, q.c0});
    }
    p.insert(p.end(), {t.stiffnessTemp.c2, t.stiffnessTemp.c1});
    p.insert(p.end(), {t.gripLoad.c2, t.gripLoad.c1, t.gripLoad.c0});
    p.insert(p.end(), {t.gripLevel.c1, t.gripLevel.c0});
    p.insert(p.end(), {t.gripTemp.c2, t.gripTemp.c1});
    p.insert(p.end(), {t.shapeC, t.curvatureE});
    return p;
}

AdaptedMfCoefficients unpack(const AdaptedMfCoefficients& templ, std::span<const double> p) {
    AdaptedMfCoefficients t = templ;
    std::size_t i = 0;
    for (auto& q : t.amplitude) {
        q = {p[i], p[i + 1], p[i + 2]};
        i += 3;
    }
    for (auto& q : t.loadTerm) {
        q = {p[i], p[i + 1], p[i + 2]};
        i += 3;
    }
    t.stiffnessTemp = {p[i], p[i + 1], 1.0};
    i += 2;
    t.gripLoad = {p[i], p[i + 1], p[i + 2]};
    i += 3;
    t.gripLevel = {p[i], p[i + 1]};
    i += 2;
    t.gripTemp = {p[i], p[i + 1], 1.0};
    i += 2;
    t.shapeC = p[i];
    t.curvatureE = p[i + 1];
    return t;
}

std::vector<std::string> joint_names() {
    return {"a311", "a312", "a313", "a321", "a322", "a323", "a331", "a332", "a333",
            "a411", "a412", "a413", "a421", "a422", "a423", "stiffness.b11", "stiffness.b12",
            "a11",  "a12",  "a13",  "a21",  "a22",  "grip.b11", "grip.b12", "C", "E"};
}

std::vector<double> joint_scales(const AdaptedMfCoefficients& t) {
    const double amp = std::max(std::abs(t.amplitude[2].c0), 1.0);
    const double load = std::max(std::abs(t.loadTerm[1].c0), 1.0);
    const double gl = std::max(std::abs(t.gripLoad.c0), 1e-7);
    const double lv = std::max(std::abs(t.gripLevel.c0), 1e-3);
    std::vector<double> s(9, amp);
    s.insert(s.end(), 6, load);
    s.insert(s.end(), {1.0, 1.0, gl, gl, gl, lv, lv, 1.0, 1.0, 1.0, 1.0});
    return s;
}

}  // namespace

PipelineResult fit_stage_pipeline(std::span<const SweepObservation> observations,
                                  const TireConditions& referenceConditions, const PipelineOptions& options) {
    if (!(referenceConditions.pressure > 0.0) || !(referenceConditions.treadDepth > 0.0) ||
        !(referenceConditions.normalLoad > 0.0) || !(options.temperatureSpan > 0.0)) {
        throw InvalidInput("reference pressure, tread depth, nominal load and temperature span must be positive");
    }
    PipelineResult result;
    result.conditionFits = fit_condition_sweeps(observations, options.solver);
    {
        std::vector<double> r;
        bool allConverged = true;
        for (const auto& cf : result.conditionFits) {
            r.push_back(cf.fit.residualRms);
            allConverged = allConverged && cf.fit.converged;
        }
        result.stages.push_back({FitStage::BaseAtCondition, rms(r), allConverged,
                                 std::to_string(result.conditionFits.size()) + " conditions, Fy residual [N]"});
    }

    const auto stiffness = fit_stiffness_levels(result.conditionFits, referenceConditions);
    {
        std::vector<double> pr;
        std::vector<double> tr;
        for (const auto& l : stiffness) {
            pr.push_back(l.pressureStageRms);
            tr.push_back(l.treadStageRms);
        }
        result.stages.push_back({FitStage::PressureTree, rms(pr), true, "a3 vs pressure residual [N/rad]"});
        result.stages.push_back({FitStage::PressureTreadTree, rms(tr), true, "pressure-coefficient vs tread residual"});
    }
    const auto grip = fit_grip_levels(result.conditionFits, referenceConditions);

    result.staged = fit_temperature_stage(result.conditionFits, stiffness, grip, referenceConditions,
                                          options.temperatureSpan, &result.stages);
    result.stagedForceRms = force_rms(result.staged, observations);
    result.refined = result.staged;
    result.refinedForceRms = result.stagedForceRms;
    result.best = result.staged;

    if (!options.jointRefinement) {
        return result;
    }

    // Condition index per observation so each residual pass evaluates the tree once per condition.
    std::vector<ConditionKey> keys;
    std::vector<std::size_t> conditionOf;
    {
        std::map<ConditionKey, std::size_t> index;
        for (const auto& o : observations) {
            const ConditionKey k{o.pressure, o.treadDepth, o.surfaceTemperature};
            auto [it, inserted] = index.try_emplace(k, keys.size());
            if (inserted) {
                keys.push_back(k);
            }
            conditionOf.push_back(it->second);
        }
    }
    const AdaptedMfCoefficients templ = result.staged;
    auto residual = [&](std::span<const SweepObservation> os, std::span<const double> p, std::span<double> out) {
        const auto tree = unpack(templ, p);
        std::vector<BaseMfCoefficients> bases(keys.size());
        std::vector<bool> ok(keys.size(), true);
        for (std::size_t k = 0; k < keys.size(); ++k) {
            try {
                bases[k] = to_base_coefficients(
                    tree, {keys[k].pressure, keys[k].treadDepth, keys[k].surfaceTemperature, 1.0});
            } catch (const CoefficientError&) {
                ok[k] = false;
            }
        }
        for (std::size_t i = 0; i < os.size(); ++i) {
            const auto k = conditionOf[i];
            // Invalid trees at a condition get a large finite penalty so the step is rejected.
            out[i] = ok[k] ? mf_force_unchecked(bases[k], os[i].slipAngle, os[i].normalLoad) - os[i].lateralForce
                           : 1e6 + std::abs(os[i].lateralForce);
        }
    };
    FitProblem problem;
    problem.observations.assign(observations.begin(), observations.end());
    problem.stage = FitStage::JointRefinement;
    problem.initialGuess = pack(result.staged);
    problem.typicalScale = joint_scales(result.staged);
    problem.names = joint_names();
    try {
        result.refinement = nlls_solve(problem, residual, options.solver);
    } catch (const FitError& e) {
        result.stages.push_back({FitStage::JointRefinement, result.stagedForceRms, false,
                                 std::string("skipped: ") + e.what()});
        return result;
    }
    result.refined = unpack(templ, result.refinement.coefficients);
    try {
        validate_over_box(result.refined);
        result.refinedForceRms = force_rms(result.refined, observations);
    } catch (const Error& e) {
        result.refined = result.staged;
        result.refinedForceRms = result.stagedForceRms;
        result.stages.push_back({FitStage::JointRefinement, result.stagedForceRms, false,
                                 std::string("rejected: ") + e.what()});
        return result;
    }
    result.stages.push_back({FitStage::JointRefinement, result.refinedForceRms, result.refinement.converged,
                             "Fy residual over all observations [N]"});
    if (result.refinedForceRms < result.stagedForceRms) {
        result.best = result.refined;
        result.refinedSelected = true;
    }
    return result;
}

void write_fit_report(std::ostream& out, const PipelineResult& result) {
    const auto flags = out.flags();
    out << "fit report\n==========\n\n";
    out << std::left << std::setw(22) << "stage" << std::setw(16) << "residual_rms" << std::setw(11) << "converged"
        << "note\n";
    for (const auto& s : result.stages) {
        out << std::left << std::setw(22) << to_string(s.stage) << std::setw(16) << std::setprecision(8) << s.residualRms
            << std::setw(11) << (s.converged ? "yes" : "no") << s.note << '\n';
    }
    out << "\nstaged Fy rms  [N]: " << std::setprecision(10) << result.stagedForceRms << '\n';
    out << "refined Fy rms [N]: " << result.refinedForceRms << '\n';
    if (!result.refinement.coefficients.empty()) {
        out << "refinement: iterations=" << result.refinement.iterations
            << " termination=" << to_string(result.refinement.termination) << '\n';
    }
    out << "selected: " << (result.refinedSelected ? "refined" : "staged")
        << "\n\ncoefficients (selected tree)\n----------------------------\n";
    const auto p = pack(result.best);
    const auto names = joint_names();
    for (std::size_t i = 0; i < p.size(); ++i) {
        out << std::left << std::setw(16) << names[i] << std::setprecision(12) << p[i] << '\n';
    }
    out << std::left << std::setw(16) << "stiffness.b13" << 1.0 << '\n';
    out << std::left << std::setw(16) << "grip.b13" << 1.0 << '\n';
    out << "\nconditions (stage 1)\n--------------------\n";
    out << "p_kpa,d_mm,T_c,a1,a2,a3,a4,C,E,rms_n,iterations,converged\n";
    for (const auto& cf : result.conditionFits) {
        const auto& c = cf.coefficients;
        out << std::setprecision(10) << cf.key.pressure << ',' << cf.key.treadDepth << ',' << cf.key.surfaceTemperature
            << ',' << c.a1 << ',' << c.a2 << ',' << c.a3 << ',' << c.a4 << ',' << c.shapeC << ',' << c.curvatureE << ','
            << cf.fit.residualRms << ',' << cf.fit.iterations << ',' << (cf.fit.converged ? 1 : 0) << '\n';
    }
    out.flags(flags);
}

}  // namespace adaptire
