#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "orkm/core_model.hpp"

using orkm::AssignmentMatrix;
using orkm::CenterSet;
using orkm::Matrix;
using orkm::MultiViewDataset;

namespace {

orkm::ClusterResult well_formed() {
    orkm::ClusterResult r;
    r.algorithm = "rkmc";
    Matrix u(2, 2);
    u << 0.7, 0.3, 0.2, 0.8;
    r.assignment = AssignmentMatrix(u);
    r.centers.centers = {Matrix::Identity(2, 3)};
    r.weights = orkm::ViewWeights::uniform(1, 2.0);
    r.objective_trace = {3.0, 2.0, 2.0};
    return r;
}

} // namespace

TEST(Objective, ExactFactorizationIsZero) {
    Matrix u(3, 2), m(2, 2);
    u << 1, 0, 0.5, 0.5, 0, 1;
    m << 1, 2, 3, 4;
    MultiViewDataset data{{u * m}, std::nullopt, "exact"};
    EXPECT_NEAR(orkm::objective_rkmc(data, AssignmentMatrix(u), CenterSet{{m}, false}, 0.0), 0.0, 1e-12);
}

TEST(Objective, OneHotRegularizerIsEtaTimesN) {
    Matrix u(3, 2), m(2, 1), x(3, 1);
    u << 1, 0, 0, 1, 1, 0;
    m << 0, 1;
    x << 0, 1, 0;
    MultiViewDataset data{{x}, std::nullopt, "one-hot"};
    EXPECT_DOUBLE_EQ(orkm::objective_rkmc(data, AssignmentMatrix(u), CenterSet{{m}, false}, 2.5), 7.5);
}

TEST(Objective, TwoByTwoHandExample) {
    MultiViewDataset data{{Matrix::Identity(2, 2)}, std::nullopt, "2x2"};
    const AssignmentMatrix u(Matrix::Constant(2, 2, 0.5));
    EXPECT_DOUBLE_EQ(orkm::objective_rkmc(data, u, CenterSet{{Matrix::Identity(2, 2)}, false}, 1.0), 2.0);
}

TEST(Objective, ShapeMismatchThrows) {
    MultiViewDataset data{{Matrix::Identity(2, 2)}, std::nullopt, "2x2"};
    const AssignmentMatrix u(Matrix::Constant(2, 2, 0.5));
    EXPECT_THROW(orkm::objective_rkmc(data, u, CenterSet{{Matrix::Identity(3, 2)}, false}, 1.0), orkm::DimensionError);
}

TEST(Objective, NonFiniteThrows) {
    Matrix x = Matrix::Identity(2, 2);
    x(0, 1) = std::numeric_limits<double>::quiet_NaN();
    MultiViewDataset data{{x}, std::nullopt, "nan"};
    const AssignmentMatrix u(Matrix::Constant(2, 2, 0.5));
    EXPECT_THROW(orkm::objective_rkmc(data, u, CenterSet{{Matrix::Identity(2, 2)}, false}, 1.0), orkm::ValidationError);
}

TEST(Objective, RandomInstancesMatchSummationOracle) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Matrix> x{oracle::random_matrix(rng, 3, 2), oracle::random_matrix(rng, 3, 4)};
        std::vector<Matrix> m{oracle::random_matrix(rng, 2, 2), oracle::random_matrix(rng, 2, 4)};
        Matrix u = oracle::random_matrix(rng, 3, 2).cwiseAbs();
        for (Eigen::Index i = 0; i < 3; ++i) u.row(i) /= u.row(i).sum();
        MultiViewDataset data{x, std::nullopt, "random"};
        EXPECT_NEAR(orkm::objective_rkmc(data, AssignmentMatrix(u), CenterSet{m, false}, 0.5),
                    oracle::objective(x, u, m, 0.5), 1e-12);
        orkm::ViewWeights w;
        w.alpha = orkm::Vector(2);
        w.alpha << 0.3, 0.7;
        w.r = 2.0;
        EXPECT_NEAR(orkm::objective_online(data, AssignmentMatrix(u), CenterSet{m, false}, w, 0.5),
                    oracle::objective(x, u, m, 0.5, {0.09, 0.49}), 1e-12);
    }
}

TEST(ObjectiveOnline, SingleViewEqualsOffline) {
    std::mt19937_64 rng(3);
    MultiViewDataset data{{oracle::random_matrix(rng, 4, 3)}, std::nullopt, "single"};
    Matrix u = Matrix::Constant(4, 2, 0.5);
    CenterSet m{{oracle::random_matrix(rng, 2, 3)}, false};
    EXPECT_DOUBLE_EQ(orkm::objective_online(data, AssignmentMatrix(u), m, orkm::ViewWeights::uniform(1, 3.0), 1.5),
                     orkm::objective_rkmc(data, AssignmentMatrix(u), m, 1.5));
}

TEST(ObjectiveOnline, IdenticalViewsHalfWeights) {
    std::mt19937_64 rng(4);
    const Matrix x = oracle::random_matrix(rng, 4, 3);
    const Matrix c = oracle::random_matrix(rng, 2, 3);
    const AssignmentMatrix u(Matrix::Constant(4, 2, 0.5));
    MultiViewDataset one{{x}, std::nullopt, "one"}, two{{x, x}, std::nullopt, "two"};
    const double residual = orkm::objective_rkmc(one, u, CenterSet{{c}, false}, 0.0);
    const double reg = 0.25 * 8;
    EXPECT_NEAR(orkm::objective_online(two, u, CenterSet{{c, c}, false}, orkm::ViewWeights::uniform(2, 2.0), 1.0),
                2 * 0.25 * residual + reg, 1e-12);
}

TEST(AssignmentMatrix, TiesGoToLowestIndex) {
    Matrix u(2, 3);
    u << 0.4, 0.4, 0.2, 0.1, 0.45, 0.45;
    EXPECT_EQ(AssignmentMatrix(u).hard_labels, (std::vector<int>{0, 1}));
}

TEST(Validate, WellFormedIsClean) { EXPECT_TRUE(orkm::validate(well_formed()).empty()); }

TEST(Validate, RowSumReported) {
    auto r = well_formed();
    r.assignment.entries.row(1) << 0.1, 0.7;
    const auto v = orkm::validate(r);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0], (orkm::Violation{"row-sum", {1}}));
}

TEST(Validate, NegativeCenterReportedWhenEnforced) {
    auto r = well_formed();
    r.centers.centers[0](1, 2) = -0.5;
    EXPECT_TRUE(orkm::validate(r).empty());
    r.centers.nonneg_enforced = true;
    const auto v = orkm::validate(r);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0], (orkm::Violation{"center-nonneg", {0, 1, 2}}));
}

TEST(Validate, ObjectiveIncreaseReportedUnlessReseed) {
    auto r = well_formed();
    r.objective_trace = {3.0, 4.0, 2.0};
    ASSERT_EQ(orkm::validate(r).size(), 1u);
    r.diagnostics.reseed_steps = {1};
    EXPECT_TRUE(orkm::validate(r).empty());
}

TEST(Validate, WeightsOffSimplexReported) {
    auto r = well_formed();
    r.weights.alpha(0) = 0.5;
    const auto v = orkm::validate(r);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].invariant, "weight-sum");
}

TEST(Dataset, ValidateRejectsRowMismatch) {
    MultiViewDataset data{{Matrix::Zero(3, 2), Matrix::Zero(4, 2)}, std::nullopt, "bad"};
    EXPECT_THROW(orkm::validate_dataset(data), orkm::ValidationError);
}

TEST(Dataset, SliceAndConcatenate) {
    Matrix a(3, 1), b(3, 2);
    a << 1, 2, 3;
    b << 4, 5, 6, 7, 8, 9;
    MultiViewDataset data{{a, b}, std::vector<int>{0, 1, 0}, "d"};
    const auto s = data.slice(1, 3);
    EXPECT_EQ(s.num_rows(), 2u);
    EXPECT_EQ(*s.labels, (std::vector<int>{1, 0}));
    Matrix want(3, 3);
    want << 1, 4, 5, 2, 6, 7, 3, 8, 9;
    EXPECT_EQ(data.concatenated(), want);
}

TEST(HyperParams, Checks) {
    orkm::HyperParams h;
    EXPECT_NO_THROW(h.check());
    h.epsilon = 0.0;
    EXPECT_THROW(h.check(), orkm::ConfigError);
    h = {};
    h.k = 3;
    h.chushi = 2;
    EXPECT_THROW(h.check(), orkm::ConfigError);
    h = {};
    h.eta = -1.0;
    EXPECT_THROW(h.check(), orkm::ConfigError);
}
