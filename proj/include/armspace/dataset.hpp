#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "armspace/csv.hpp"
#include "armspace/errors.hpp"
#include "armspace/kinematics.hpp"
#include "armspace/parallel.hpp"
#include "armspace/robots.hpp"
#include "armspace/types.hpp"

namespace armspace {

enum class DatasetVariant { conf_kine, conf_dyna, jacob_e, jacob_0 };

inline std::string variant_name(DatasetVariant v) {
    switch (v) {
        case DatasetVariant::conf_kine: return "conf-kine";
        case DatasetVariant::conf_dyna: return "conf-dyna";
        case DatasetVariant::jacob_e: return "jacob-e";
        case DatasetVariant::jacob_0: return "jacob-0";
    }
    throw UnknownAlgo("bad dataset variant");
}

inline DatasetVariant variant_from_name(const std::string& name) {
    if (name == "conf-kine") return DatasetVariant::conf_kine;
    if (name == "conf-dyna") return DatasetVariant::conf_dyna;
    if (name == "jacob-e") return DatasetVariant::jacob_e;
    if (name == "jacob-0") return DatasetVariant::jacob_0;
    throw UnknownAlgo("unknown dataset variant: " + name);
}

inline bool variant_has_dynamics(DatasetVariant v) { return v != DatasetVariant::conf_kine; }
inline bool variant_is_confidence(DatasetVariant v) {
    return v == DatasetVariant::conf_kine || v == DatasetVariant::conf_dyna;
}

struct SampleOptions {
    DatasetVariant variant = DatasetVariant::conf_kine;
    int dof = 6;
    double position_lo = -0.4;
    double position_hi = 0.4;
    double dh_free_lo = 0.0;
    double dh_free_hi = 0.5;
    int plim = 50;
    double cutoff = 0.03;
    double test_ratio = 0.01;
    std::uint64_t seed = 0;
    bool parallel = false;
    int threads = 0;  // 0 = hardware concurrency
    int multistart = 8;

    // Options accepted for compatibility with the sampling script interface
    // and recorded in metadata, but not interpreted by this implementation.
    std::string mani = "kine";
    std::string type = "spherical";
    std::string dist = "uniform";
    std::string ikine = "numeric";
    double r = 0.5;
    double pose_r = 0.8;

    void validate() const {
        if (dof != 6) throw DomainError("only 6-DOF sampling is supported");
        if (plim < 1) throw DomainError("plim must be >= 1");
        if (!(cutoff > 0.0)) throw DomainError("cutoff must be positive");
        if (!(test_ratio > 0.0 && test_ratio < 1.0))
            throw DomainError("test_ratio must be in (0, 1)");
    }
};

/// Column layout of the feature matrices. The 18 DH columns are
/// [d1..d6, a1..a6, alpha1..alpha6]; columns {2,3,7,8} (d3, d4, a2, a3) are
/// the free parameters, everything else in the DH block is a template
/// constant. Dynamics variants append per-link mass, center of mass,
/// diagonal inertia, viscous friction, Coulomb friction pairs, gear ratio
/// and motor inertia before the pose columns.
struct FeatureLayout {
    struct Column {
        double lo = 0.0;
        double hi = 0.0;
        bool constant = false;
        double value = 0.0;  // meaningful when constant
    };

    std::vector<Column> columns;
    int pose_position_start = 0;
    int pose_orientation_start = 0;

    static int feature_width(DatasetVariant v) { return variant_has_dynamics(v) ? 96 : 24; }
    static int target_width(DatasetVariant v) { return variant_is_confidence(v) ? 1 : 36; }

    static FeatureLayout describe(DatasetVariant v, const SampleOptions& opts = {}) {
        FeatureLayout layout;
        const PumaTemplate tmpl;
        auto free_col = [&](double lo, double hi) {
            layout.columns.push_back(Column{lo, hi, false, 0.0});
        };
        auto const_col = [&](double value) {
            layout.columns.push_back(Column{value, value, true, value});
        };

        for (int i = 0; i < 6; ++i) {  // d block
            if (i == 2 || i == 3)
                free_col(opts.dh_free_lo, opts.dh_free_hi);
            else
                const_col(tmpl.d[static_cast<std::size_t>(i)]);
        }
        for (int i = 0; i < 6; ++i) {  // a block
            if (i == 1 || i == 2)
                free_col(opts.dh_free_lo, opts.dh_free_hi);
            else
                const_col(tmpl.a[static_cast<std::size_t>(i)]);
        }
        for (int i = 0; i < 6; ++i) const_col(tmpl.alpha[static_cast<std::size_t>(i)]);

        if (variant_has_dynamics(v)) {
            for (int i = 0; i < 6; ++i) free_col(0.0, 10.0);         // mass
            for (int i = 0; i < 18; ++i) free_col(-0.05, 0.05);      // center of mass
            for (int i = 0; i < 18; ++i) free_col(0.0, 1.0);         // diagonal inertia
            for (int i = 0; i < 6; ++i) free_col(0.0, 0.005);        // viscous friction
            for (int i = 0; i < 6; ++i) {                            // Coulomb pairs (+, -)
                free_col(0.0, 0.5);
                free_col(-0.5, 0.0);
            }
            for (int i = 0; i < 6; ++i) free_col(-50.0, 50.0);       // gear ratio
            for (int i = 0; i < 6; ++i) free_col(0.0, 5e-4);         // motor inertia
        }

        layout.pose_position_start = static_cast<int>(layout.columns.size());
        for (int i = 0; i < 3; ++i) free_col(opts.position_lo, opts.position_hi);
        layout.pose_orientation_start = static_cast<int>(layout.columns.size());
        for (int i = 0; i < 3; ++i) free_col(0.0, 2.0 * kPi);
        return layout;
    }

    struct Audit {
        bool in_range = true;
        bool constants_ok = true;
        std::int64_t range_violations = 0;
    };

    Audit check(const Matrix& features) const {
        Audit audit;
        if (features.cols() != static_cast<Eigen::Index>(columns.size()))
            throw ShapeMismatch("feature width does not match layout");
        const double tol = 1e-12;
        for (Eigen::Index c = 0; c < features.cols(); ++c) {
            const Column& col = columns[static_cast<std::size_t>(c)];
            for (Eigen::Index r = 0; r < features.rows(); ++r) {
                const double v = features(r, c);
                if (col.constant) {
                    if (v != features(0, c)) audit.constants_ok = false;
                    if (std::abs(v - col.value) > tol) audit.constants_ok = false;
                } else if (v < col.lo - tol || v > col.hi + tol) {
                    audit.in_range = false;
                    ++audit.range_violations;
                }
            }
        }
        return audit;
    }
};

/// Random PUMA-family manipulator: d3, d4, a2, a3 ~ U(dh_free_lo, dh_free_hi)
/// drawn in that order, template constants elsewhere.
inline Manipulator rand_kine(Rng& rng, const SampleOptions& opts = {}) {
    const PumaTemplate tmpl;
    const double d3 = rng.uniform(opts.dh_free_lo, opts.dh_free_hi);
    const double d4 = rng.uniform(opts.dh_free_lo, opts.dh_free_hi);
    const double a2 = rng.uniform(opts.dh_free_lo, opts.dh_free_hi);
    const double a3 = rng.uniform(opts.dh_free_lo, opts.dh_free_hi);
    return tmpl.instantiate(d3, d4, a2, a3);
}

/// rand_kine plus uniformly drawn dynamics parameters. Draw order matches
/// the feature column order exactly.
inline Manipulator rand_dyna(Rng& rng, const SampleOptions& opts = {}) {
    Manipulator m = rand_kine(rng, opts);
    m.dynamics.resize(6);
    for (auto& dyn : m.dynamics) dyn.mass = rng.uniform(0.0, 10.0);
    for (auto& dyn : m.dynamics)
        for (int i = 0; i < 3; ++i) dyn.com[i] = rng.uniform(-0.05, 0.05);
    for (auto& dyn : m.dynamics)
        for (int i = 0; i < 3; ++i) dyn.inertia_diag[i] = rng.uniform(0.0, 1.0);
    for (auto& dyn : m.dynamics) dyn.viscous_friction = rng.uniform(0.0, 0.005);
    for (auto& dyn : m.dynamics) {
        dyn.coulomb_friction[0] = rng.uniform(0.0, 0.5);
        dyn.coulomb_friction[1] = rng.uniform(-0.5, 0.0);
    }
    for (auto& dyn : m.dynamics) dyn.gear_ratio = rng.uniform(-50.0, 50.0);
    for (auto& dyn : m.dynamics) dyn.motor_inertia = rng.uniform(0.0, 5e-4);
    return m;
}

struct PoseSample {
    Pose pose;
    Vec3 position;
    Vec3 rpy;
};

inline PoseSample rand_pose_sample(Rng& rng, const SampleOptions& opts = {}) {
    PoseSample s;
    for (int i = 0; i < 3; ++i) s.position[i] = rng.uniform(opts.position_lo, opts.position_hi);
    for (int i = 0; i < 3; ++i) s.rpy[i] = rng.uniform(0.0, 2.0 * kPi);
    s.pose = Pose{rpy_to_rotation(s.rpy), s.position};
    return s;
}

inline Pose rand_pose(Rng& rng, const SampleOptions& opts = {}) {
    return rand_pose_sample(rng, opts).pose;
}

/// Manipulator -> DH feature block (18 values).
inline void vectorize_kine(const Manipulator& m, double* out) {
    for (int i = 0; i < 6; ++i) out[i] = m.links[static_cast<std::size_t>(i)].d;
    for (int i = 0; i < 6; ++i) out[6 + i] = m.links[static_cast<std::size_t>(i)].a;
    for (int i = 0; i < 6; ++i) out[12 + i] = m.links[static_cast<std::size_t>(i)].alpha;
}

/// Manipulator with dynamics -> 90-value block (18 DH + 72 dynamics).
inline void vectorize_dyna(const Manipulator& m, double* out) {
    vectorize_kine(m, out);
    int k = 18;
    for (int i = 0; i < 6; ++i) out[k++] = m.dynamics[static_cast<std::size_t>(i)].mass;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 3; ++j) out[k++] = m.dynamics[static_cast<std::size_t>(i)].com[j];
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 3; ++j)
            out[k++] = m.dynamics[static_cast<std::size_t>(i)].inertia_diag[j];
    for (int i = 0; i < 6; ++i)
        out[k++] = m.dynamics[static_cast<std::size_t>(i)].viscous_friction;
    for (int i = 0; i < 6; ++i) {
        out[k++] = m.dynamics[static_cast<std::size_t>(i)].coulomb_friction[0];
        out[k++] = m.dynamics[static_cast<std::size_t>(i)].coulomb_friction[1];
    }
    for (int i = 0; i < 6; ++i) out[k++] = m.dynamics[static_cast<std::size_t>(i)].gear_ratio;
    for (int i = 0; i < 6; ++i) out[k++] = m.dynamics[static_cast<std::size_t>(i)].motor_inertia;
}

/// Rebuilds a manipulator from a feature row (kinematic prefix; dynamics
/// when the row is 96 wide).
inline Manipulator manipulator_from_features(const double* row, bool with_dynamics) {
    Manipulator m;
    m.links.resize(6);
    for (int i = 0; i < 6; ++i) {
        m.links[static_cast<std::size_t>(i)] = DHLink{row[i], row[6 + i], row[12 + i], 0.0};
    }
    if (with_dynamics) {
        m.dynamics.resize(6);
        int k = 18;
        for (int i = 0; i < 6; ++i) m.dynamics[static_cast<std::size_t>(i)].mass = row[k++];
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 3; ++j) m.dynamics[static_cast<std::size_t>(i)].com[j] = row[k++];
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 3; ++j)
                m.dynamics[static_cast<std::size_t>(i)].inertia_diag[j] = row[k++];
        for (int i = 0; i < 6; ++i)
            m.dynamics[static_cast<std::size_t>(i)].viscous_friction = row[k++];
        for (int i = 0; i < 6; ++i) {
            m.dynamics[static_cast<std::size_t>(i)].coulomb_friction[0] = row[k++];
            m.dynamics[static_cast<std::size_t>(i)].coulomb_friction[1] = row[k++];
        }
        for (int i = 0; i < 6; ++i) m.dynamics[static_cast<std::size_t>(i)].gear_ratio = row[k++];
        for (int i = 0; i < 6; ++i)
            m.dynamics[static_cast<std::size_t>(i)].motor_inertia = row[k++];
    }
    return m;
}

inline MultiStartOptions label_ik_options(const SampleOptions& opts, BranchPolicy policy) {
    MultiStartOptions ms;
    ms.ik.plim = opts.plim;
    ms.ik.cutoff = opts.cutoff;
    ms.random_starts = opts.multistart;
    ms.policy = policy;
    return ms;
}

/// Solution-existence label: 1 iff multi-start numerical IK converges.
inline int label_confidence(const Manipulator& m, const Pose& pose, const SampleOptions& opts,
                            std::uint64_t ik_seed) {
    return ikine_multistart(m, pose, ik_seed, label_ik_options(opts, BranchPolicy::first_hit))
                   .converged
               ? 1
               : 0;
}

enum class JacobianFrame { world, end_effector };

/// Row-major flattened 6x6 Jacobian at the converged configuration, or an
/// all-infinity sentinel when no solution is found. Among converging starts
/// the branch with the smallest wrapped joint norm is used, which keeps the
/// pose -> Jacobian labeling as single-valued as numerical IK allows.
inline Vector label_jacobian(const Manipulator& m, const Pose& pose, JacobianFrame frame,
                             const SampleOptions& opts, std::uint64_t ik_seed) {
    const IkineResult r =
        ikine_multistart(m, pose, ik_seed, label_ik_options(opts, BranchPolicy::min_norm));
    Vector out(36);
    if (!r.converged) {
        out.setConstant(std::numeric_limits<double>::infinity());
        return out;
    }
    const Jacobian j = frame == JacobianFrame::world ? jacob0(m, r.q) : jacobe(m, r.q);
    for (int row = 0; row < 6; ++row)
        for (int col = 0; col < 6; ++col) out[row * 6 + col] = j(row, col);
    return out;
}

struct DatasetFile {
    Matrix features;
    Matrix labels;
};

struct LabelStats {
    std::int64_t positive = 0;  // conf: label 1; jacob: rows with a solution
    std::int64_t negative = 0;
};

struct DatasetPair {
    DatasetFile train;
    DatasetFile test;
    SampleOptions options;
    LabelStats stats;
};

/// Draws `num` samples, labels them per the variant and splits off the last
/// round(num * test_ratio) rows as the test set. Per-sample generators are
/// derived from (seed, index), so thread count does not affect the output.
inline DatasetPair nnsample(std::int64_t num, const SampleOptions& opts) {
    opts.validate();
    if (num < 1) throw DomainError("num must be >= 1");

    const int width = FeatureLayout::feature_width(opts.variant);
    const int targets = FeatureLayout::target_width(opts.variant);
    Matrix features(num, width);
    Matrix labels(num, targets);

    const bool dyna = variant_has_dynamics(opts.variant);
    auto sample_one = [&](std::int64_t i) {
        Rng rng(mix_seed(opts.seed, static_cast<std::uint64_t>(2 * i)));
        const std::uint64_t ik_seed = mix_seed(opts.seed, static_cast<std::uint64_t>(2 * i + 1));
        const Manipulator m = dyna ? rand_dyna(rng, opts) : rand_kine(rng, opts);
        double* row = features.row(i).data();
        if (dyna)
            vectorize_dyna(m, row);
        else
            vectorize_kine(m, row);
        const PoseSample pose = rand_pose_sample(rng, opts);
        for (int k = 0; k < 3; ++k) row[width - 6 + k] = pose.position[k];
        for (int k = 0; k < 3; ++k) row[width - 3 + k] = pose.rpy[k];

        switch (opts.variant) {
            case DatasetVariant::conf_kine:
            case DatasetVariant::conf_dyna:
                labels(i, 0) = label_confidence(m, pose.pose, opts, ik_seed);
                break;
            case DatasetVariant::jacob_e:
                labels.row(i) =
                    label_jacobian(m, pose.pose, JacobianFrame::end_effector, opts, ik_seed)
                        .transpose();
                break;
            case DatasetVariant::jacob_0:
                labels.row(i) =
                    label_jacobian(m, pose.pose, JacobianFrame::world, opts, ik_seed).transpose();
                break;
        }
    };

    parallel_for(num, opts.parallel ? opts.threads : 1, sample_one);

    DatasetPair pair;
    pair.options = opts;
    for (std::int64_t i = 0; i < num; ++i) {
        const bool solved = std::isfinite(labels(i, 0)) && (targets > 1 || labels(i, 0) > 0.5);
        (solved ? pair.stats.positive : pair.stats.negative)++;
    }

    const auto test_rows = static_cast<std::int64_t>(std::llround(
        static_cast<double>(num) * opts.test_ratio));
    const std::int64_t train_rows = num - test_rows;
    pair.train.features = features.topRows(train_rows);
    pair.train.labels = labels.topRows(train_rows);
    pair.test.features = features.bottomRows(test_rows);
    pair.test.labels = labels.bottomRows(test_rows);
    return pair;
}

inline std::string dataset_prefix(DatasetVariant v) {
    switch (v) {
        case DatasetVariant::conf_kine: return "conf";
        case DatasetVariant::conf_dyna: return "conf";
        case DatasetVariant::jacob_e: return "jacob";
        case DatasetVariant::jacob_0: return "jacob0";
    }
    throw UnknownAlgo("bad dataset variant");
}

inline std::string dataset_file_name(DatasetVariant v, const std::string& kind,
                                     const std::string& split) {
    // conf_feature_train.csv, conf_label_dyna_test.csv, jacob0_feature_train.csv, ...
    std::string name = dataset_prefix(v) + "_" + kind;
    if (v == DatasetVariant::conf_dyna) name += "_dyna";
    return name + "_" + split + ".csv";
}

inline std::string dataset_meta_name(DatasetVariant v) {
    std::string name = dataset_prefix(v);
    if (v == DatasetVariant::conf_dyna) name += "_dyna";
    return name + "_meta.json";
}

inline nlohmann::json dataset_metadata(const DatasetPair& pair) {
    const SampleOptions& o = pair.options;
    const PumaTemplate tmpl;
    nlohmann::json meta;
    meta["variant"] = variant_name(o.variant);
    meta["samples"] = pair.train.features.rows() + pair.test.features.rows();
    meta["train_rows"] = pair.train.features.rows();
    meta["test_rows"] = pair.test.features.rows();
    meta["feature_width"] = FeatureLayout::feature_width(o.variant);
    meta["target_width"] = FeatureLayout::target_width(o.variant);
    meta["seed"] = o.seed;
    meta["options"] = {
        {"dof", o.dof},         {"plim", o.plim},
        {"cutoff", o.cutoff},   {"test_ratio", o.test_ratio},
        {"multistart", o.multistart}, {"position_range", {o.position_lo, o.position_hi}},
        {"dh_free_range", {o.dh_free_lo, o.dh_free_hi}},
    };
    meta["uninterpreted_options"] = {
        {"mani", o.mani}, {"type", o.type},   {"dist", o.dist},
        {"r", o.r},       {"poseR", o.pose_r}, {"ikine", o.ikine},
    };
    meta["template"] = {
        {"d", tmpl.d},
        {"a", tmpl.a},
        {"alpha", tmpl.alpha},
        {"free_columns", {2, 3, 7, 8}},
    };
    const double total = static_cast<double>(pair.stats.positive + pair.stats.negative);
    meta["labels"] = {
        {"positive", pair.stats.positive},
        {"negative", pair.stats.negative},
        {"positive_ratio", total > 0 ? static_cast<double>(pair.stats.positive) / total : 0.0},
    };
    return meta;
}

/// Writes the four CSV files plus the metadata sidecar into dir.
inline void write_dataset(const DatasetPair& pair, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    const DatasetVariant v = pair.options.variant;
    auto path = [&](const std::string& name) { return (fs::path(dir) / name).string(); };
    write_csv(pair.train.features, path(dataset_file_name(v, "feature", "train")));
    write_csv(pair.train.labels, path(dataset_file_name(v, "label", "train")));
    write_csv(pair.test.features, path(dataset_file_name(v, "feature", "test")));
    write_csv(pair.test.labels, path(dataset_file_name(v, "label", "test")));

    std::ofstream meta(path(dataset_meta_name(v)), std::ios::binary);
    if (!meta) throw IoError("cannot write metadata in " + dir);
    meta << dataset_metadata(pair).dump(2) << "\n";
}

/// Reads one split ("train"/"test") of a dataset directory.
inline DatasetFile read_dataset_split(const std::string& dir, DatasetVariant v,
                                      const std::string& split) {
    namespace fs = std::filesystem;
    DatasetFile file;
    file.features = read_csv((fs::path(dir) / dataset_file_name(v, "feature", split)).string());
    file.labels = read_csv((fs::path(dir) / dataset_file_name(v, "label", split)).string());
    if (file.features.rows() != file.labels.rows())
        throw ShapeMismatch("feature/label row counts differ in " + dir);
    return file;
}

}  // namespace armspace
