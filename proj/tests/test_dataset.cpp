#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "armspace/dataset.hpp"

using namespace armspace;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("armspace_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("csv round trip is bitwise stable") {
    Rng rng(7);
    Matrix m(100, 7);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-1e3, 1e3);
    m(3, 2) = std::numeric_limits<double>::infinity();
    m(5, 0) = 0.0;
    m(9, 6) = -1.25e-17;

    TempDir dir;
    const std::string p1 = (dir.path / "a.csv").string();
    const std::string p2 = (dir.path / "b.csv").string();
    write_csv(m, p1);
    const Matrix back = read_csv(p1);
    REQUIRE(back.rows() == m.rows());
    REQUIRE(back.cols() == m.cols());
    REQUIRE(back == m);
    write_csv(back, p2);
    REQUIRE(slurp(p1) == slurp(p2));
}

TEST_CASE("csv rejects ragged and malformed rows") {
    std::istringstream ragged("1,2,3\n4,5\n");
    REQUIRE_THROWS_AS(read_csv(ragged), MalformedRow);
    std::istringstream junk("1,2\n3,x\n");
    REQUIRE_THROWS_AS(read_csv(junk), MalformedRow);
    try {
        std::istringstream again("1,2\n3\n");
        read_csv(again);
        FAIL("expected MalformedRow");
    } catch (const MalformedRow& e) {
        REQUIRE(e.row == 1);
    }
}

TEST_CASE("rand_kine is deterministic and respects ranges") {
    Rng a(123), b(123);
    const Manipulator ma = rand_kine(a);
    const Manipulator mb = rand_kine(b);
    for (int i = 0; i < 6; ++i) {
        REQUIRE(ma.links[i].d == mb.links[i].d);
        REQUIRE(ma.links[i].a == mb.links[i].a);
        REQUIRE(ma.links[i].alpha == mb.links[i].alpha);
    }

    const PumaTemplate tmpl;
    Rng rng(99);
    for (int i = 0; i < 10000; ++i) {
        const Manipulator m = rand_kine(rng);
        REQUIRE(m.links[2].d >= 0.0);
        REQUIRE(m.links[2].d < 0.5);
        REQUIRE(m.links[3].d >= 0.0);
        REQUIRE(m.links[3].d < 0.5);
        REQUIRE(m.links[1].a >= 0.0);
        REQUIRE(m.links[1].a < 0.5);
        REQUIRE(m.links[2].a >= 0.0);
        REQUIRE(m.links[2].a < 0.5);
        // constant columns bitwise constant
        REQUIRE(m.links[0].d == tmpl.d[0]);
        REQUIRE(m.links[5].a == tmpl.a[5]);
        for (int l = 0; l < 6; ++l) REQUIRE(m.links[l].alpha == tmpl.alpha[l]);
    }
}

TEST_CASE("manipulator vectorization round trips") {
    Rng rng(5);
    SampleOptions opts;
    const Manipulator m = rand_dyna(rng, opts);
    double row[96] = {};
    vectorize_dyna(m, row);
    const Manipulator back = manipulator_from_features(row, true);
    for (int i = 0; i < 6; ++i) {
        REQUIRE(back.links[i].d == m.links[i].d);
        REQUIRE(back.links[i].a == m.links[i].a);
        REQUIRE(back.links[i].alpha == m.links[i].alpha);
        REQUIRE(back.dynamics[i].mass == m.dynamics[i].mass);
        REQUIRE(back.dynamics[i].com == m.dynamics[i].com);
        REQUIRE(back.dynamics[i].inertia_diag == m.dynamics[i].inertia_diag);
        REQUIRE(back.dynamics[i].viscous_friction == m.dynamics[i].viscous_friction);
        REQUIRE(back.dynamics[i].coulomb_friction == m.dynamics[i].coulomb_friction);
        REQUIRE(back.dynamics[i].gear_ratio == m.dynamics[i].gear_ratio);
        REQUIRE(back.dynamics[i].motor_inertia == m.dynamics[i].motor_inertia);
    }
}

TEST_CASE("rand_dyna respects column ranges and Coulomb sign split") {
    Rng rng(17);
    for (int i = 0; i < 10000; ++i) {
        const Manipulator m = rand_dyna(rng);
        for (const auto& dyn : m.dynamics) {
            REQUIRE(dyn.mass >= 0.0);
            REQUIRE(dyn.mass < 10.0);
            for (int j = 0; j < 3; ++j) {
                REQUIRE(std::abs(dyn.com[j]) <= 0.05);
                REQUIRE(dyn.inertia_diag[j] >= 0.0);
                REQUIRE(dyn.inertia_diag[j] < 1.0);
            }
            REQUIRE(dyn.viscous_friction >= 0.0);
            REQUIRE(dyn.viscous_friction < 0.005);
            REQUIRE(dyn.coulomb_friction[0] >= 0.0);
            REQUIRE(dyn.coulomb_friction[0] < 0.5);
            REQUIRE(dyn.coulomb_friction[1] <= 0.0);
            REQUIRE(dyn.coulomb_friction[1] > -0.5);
            REQUIRE(std::abs(dyn.gear_ratio) <= 50.0);
            REQUIRE(dyn.motor_inertia >= 0.0);
            REQUIRE(dyn.motor_inertia < 5e-4);
        }
    }
}

TEST_CASE("rand_pose yields valid rotations inside bounds") {
    Rng rng(23);
    SampleOptions opts;
    for (int i = 0; i < 10000; ++i) {
        const PoseSample s = rand_pose_sample(rng, opts);
        for (int j = 0; j < 3; ++j) {
            REQUIRE(s.position[j] >= opts.position_lo);
            REQUIRE(s.position[j] <= opts.position_hi);
            REQUIRE(s.rpy[j] >= 0.0);
            REQUIRE(s.rpy[j] < 2.0 * kPi);
        }
        if (i % 100 == 0) REQUIRE(is_rotation(s.pose.rotation));
    }
    REQUIRE(rpy_to_rotation(Vec3::Zero()).isApprox(Mat3::Identity(), 1e-15));
}

TEST_CASE("label_confidence on constructed and impossible poses") {
    Rng rng(31);
    SampleOptions opts;
    for (int i = 0; i < 20; ++i) {
        const Manipulator m = rand_kine(rng);
        JointVec q(6);
        for (int k = 0; k < 6; ++k) q[k] = rng.uniform(0.0, 2.0 * kPi);
        const Pose reachable = fkine(m, q);
        REQUIRE(label_confidence(m, reachable, opts, mix_seed(1, i)) == 1);

        double reach = 0.0;
        for (const auto& link : m.links) reach += std::abs(link.a) + std::abs(link.d);
        Pose beyond;
        beyond.translation = Vec3(reach + 1.0, 0, 0);
        REQUIRE(label_confidence(m, beyond, opts, mix_seed(2, i)) == 0);
    }
}

TEST_CASE("label_confidence agrees with a brute-force grid on a planar arm") {
    // 2-link planar arm with a position-only target: a dense 360^2 joint grid
    // is the independent oracle for "something within cutoff exists".
    const Manipulator two = planar_arm({0.25, 0.15});
    SampleOptions opts;
    opts.cutoff = 0.03;

    Rng rng(37);
    const int grid = 360;
    int agree = 0;
    const int total = 200;
    for (int trial = 0; trial < total; ++trial) {
        const Vec3 point(rng.uniform(-0.45, 0.45), rng.uniform(-0.45, 0.45), 0.0);

        bool brute = false;
        JointVec best_q(2);
        JointVec q(2);
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < grid; ++i) {
            q[0] = 2.0 * kPi * i / grid;
            for (int j = 0; j < grid; ++j) {
                q[1] = 2.0 * kPi * j / grid;
                const double dist = (fkine(two, q).translation - point).norm();
                if (dist < best) {
                    best = dist;
                    best_q = q;
                }
            }
        }
        brute = best < opts.cutoff;

        // full-pose target whose orientation comes from the closest grid
        // configuration, so reachability is decided by position alone
        Pose target;
        target.translation = point;
        target.rotation = fkine(two, best_q).rotation;
        const int label = label_confidence(two, target, opts, mix_seed(3, trial));
        if ((label == 1) == brute) ++agree;
    }
    REQUIRE(agree >= static_cast<int>(0.99 * total));
}

TEST_CASE("label_jacobian matches construct-and-solve oracle") {
    Rng rng(41);
    SampleOptions opts;
    opts.cutoff = 1e-6;  // tight so a recovered branch reproduces J precisely
    int branch_matches = 0;
    const int total = 30;
    for (int i = 0; i < total; ++i) {
        const Manipulator m = rand_kine(rng);
        JointVec q(6);
        for (int k = 0; k < 6; ++k) q[k] = rng.uniform(0.0, 2.0 * kPi);
        const Pose target = fkine(m, q);
        const Vector lab = label_jacobian(m, target, JacobianFrame::world, opts, mix_seed(4, i));
        REQUIRE(lab.allFinite());

        const Jacobian expected = jacob0(m, q);
        double err = 0.0;
        for (int r = 0; r < 6; ++r)
            for (int c = 0; c < 6; ++c)
                err = std::max(err, std::abs(lab[r * 6 + c] - expected(r, c)));
        // the canonical branch may differ from the constructed one; that is
        // tolerated, but both frames must describe the same solution
        if (err < 1e-4) ++branch_matches;

        const Vector lab_e =
            label_jacobian(m, target, JacobianFrame::end_effector, opts, mix_seed(4, i));
        REQUIRE(lab_e.allFinite());
        const Mat3& r_target = target.rotation;
        double frame_err = 0.0;
        for (int r = 0; r < 6; ++r)
            for (int c = 0; c < 6; ++c) {
                double lifted = 0.0;
                const int base = r < 3 ? 0 : 3;
                for (int k = 0; k < 3; ++k)
                    lifted += r_target(r - base, k) * lab_e[(base + k) * 6 + c];
                frame_err = std::max(frame_err, std::abs(lifted - lab[r * 6 + c]));
            }
        REQUIRE(frame_err < 1e-4);
    }
    INFO("constructed branch recovered " << branch_matches << "/" << total);
    REQUIRE(branch_matches >= 1);
}

TEST_CASE("label_jacobian recovers near-zero branches") {
    // a small constructed configuration is its own minimal-norm branch, so
    // the canonical selection should reproduce its Jacobian almost always
    Rng rng(47);
    SampleOptions opts;
    opts.cutoff = 1e-6;
    int branch_matches = 0;
    const int total = 25;
    for (int i = 0; i < total; ++i) {
        const Manipulator m = rand_kine(rng);
        JointVec q(6);
        for (int k = 0; k < 6; ++k) q[k] = rng.uniform(-0.3, 0.3);
        const Vector lab =
            label_jacobian(m, fkine(m, q), JacobianFrame::world, opts, mix_seed(5, i));
        if (!lab.allFinite()) continue;
        const Jacobian expected = jacob0(m, q);
        double err = 0.0;
        for (int r = 0; r < 6; ++r)
            for (int c = 0; c < 6; ++c)
                err = std::max(err, std::abs(lab[r * 6 + c] - expected(r, c)));
        if (err < 1e-4) ++branch_matches;
    }
    REQUIRE(branch_matches >= static_cast<int>(0.6 * total));
}

TEST_CASE("label_jacobian emits the sentinel for unreachable poses") {
    Rng rng(43);
    const Manipulator m = rand_kine(rng);
    Pose beyond;
    beyond.translation = Vec3(5.0, 5.0, 5.0);
    SampleOptions opts;
    const Vector lab = label_jacobian(m, beyond, JacobianFrame::world, opts, 9);
    REQUIRE(lab.size() == 36);
    for (int i = 0; i < 36; ++i) REQUIRE(std::isinf(lab[i]));
}

TEST_CASE("nnsample split shapes and ranges") {
    SampleOptions opts;
    opts.variant = DatasetVariant::conf_kine;
    opts.seed = 2024;
    const DatasetPair pair = nnsample(1000, opts);
    REQUIRE(pair.train.features.rows() == 990);
    REQUIRE(pair.test.features.rows() == 10);
    REQUIRE(pair.train.features.cols() == 24);
    REQUIRE(pair.train.labels.cols() == 1);

    const FeatureLayout layout = FeatureLayout::describe(opts.variant, opts);
    const auto audit = layout.check(pair.train.features);
    REQUIRE(audit.in_range);
    REQUIRE(audit.constants_ok);
    for (Eigen::Index i = 0; i < pair.train.labels.rows(); ++i) {
        const double label = pair.train.labels(i, 0);
        REQUIRE((label == 0.0 || label == 1.0));
    }
    REQUIRE(pair.stats.positive + pair.stats.negative == 1000);
    REQUIRE(pair.stats.positive > 0);
    REQUIRE(pair.stats.negative > 0);
}

TEST_CASE("nnsample parallel output is bitwise identical to serial") {
    SampleOptions serial;
    serial.variant = DatasetVariant::jacob_0;
    serial.seed = 77;
    SampleOptions parallel = serial;
    parallel.parallel = true;
    parallel.threads = 4;

    const DatasetPair a = nnsample(400, serial);
    const DatasetPair b = nnsample(400, parallel);
    REQUIRE(a.train.features == b.train.features);
    REQUIRE(a.train.labels == b.train.labels);
    REQUIRE(a.test.features == b.test.features);
    REQUIRE(a.test.labels == b.test.labels);
}

TEST_CASE("jacob variants have 96 features and 36 targets with sentinels") {
    SampleOptions opts;
    opts.variant = DatasetVariant::jacob_e;
    opts.seed = 5;
    const DatasetPair pair = nnsample(300, opts);
    REQUIRE(pair.train.features.cols() == 96);
    REQUIRE(pair.train.labels.cols() == 36);

    const FeatureLayout layout = FeatureLayout::describe(opts.variant, opts);
    REQUIRE(layout.check(pair.train.features).in_range);

    bool saw_sentinel = false, saw_solution = false;
    for (Eigen::Index i = 0; i < pair.train.labels.rows(); ++i) {
        if (std::isinf(pair.train.labels(i, 0)))
            saw_sentinel = true;
        else
            saw_solution = true;
    }
    REQUIRE(saw_sentinel);
    REQUIRE(saw_solution);
}

TEST_CASE("dataset files are written with the canonical names") {
    SampleOptions opts;
    opts.variant = DatasetVariant::conf_dyna;
    opts.seed = 11;
    const DatasetPair pair = nnsample(200, opts);

    TempDir dir;
    write_dataset(pair, dir.path.string());
    REQUIRE(fs::exists(dir.path / "conf_feature_dyna_train.csv"));
    REQUIRE(fs::exists(dir.path / "conf_label_dyna_train.csv"));
    REQUIRE(fs::exists(dir.path / "conf_feature_dyna_test.csv"));
    REQUIRE(fs::exists(dir.path / "conf_label_dyna_test.csv"));
    REQUIRE(fs::exists(dir.path / "conf_dyna_meta.json"));

    const DatasetFile train = read_dataset_split(dir.path.string(), opts.variant, "train");
    REQUIRE(train.features == pair.train.features);
    REQUIRE(train.labels == pair.train.labels);

    const auto meta = nlohmann::json::parse(slurp(dir.path / "conf_dyna_meta.json"));
    REQUIRE(meta["variant"] == "conf-dyna");
    REQUIRE(meta["seed"] == 11);
    REQUIRE(meta["template"]["free_columns"] == nlohmann::json({2, 3, 7, 8}));
}

TEST_CASE("conf-kine file names match the published layout") {
    REQUIRE(dataset_file_name(DatasetVariant::conf_kine, "feature", "train") ==
            "conf_feature_train.csv");
    REQUIRE(dataset_file_name(DatasetVariant::conf_kine, "label", "test") ==
            "conf_label_test.csv");
    REQUIRE(dataset_file_name(DatasetVariant::jacob_0, "label", "test") ==
            "jacob0_label_test.csv");
    REQUIRE(dataset_file_name(DatasetVariant::jacob_e, "feature", "train") ==
            "jacob_feature_train.csv");
}

TEST_CASE("sample options are validated") {
    SampleOptions opts;
    opts.test_ratio = 0.0;
    REQUIRE_THROWS_AS(nnsample(10, opts), DomainError);
    opts.test_ratio = 0.5;
    opts.plim = 0;
    REQUIRE_THROWS_AS(nnsample(10, opts), DomainError);
}
