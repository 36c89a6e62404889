#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "mln/noise.hpp"
#include "mln/trainer.hpp"
#include "support.hpp"

using namespace mln;
using namespace mln::testing;

namespace {

TrainerConfig small_config() {
    TrainerConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 16;
    cfg.mixtures = 2;
    cfg.lambda1 = 1.0;
    cfg.lambda2 = 1.0;
    cfg.seed = 7;
    return cfg;
}

}  // namespace

TEST_CASE("zero epochs leave the parameters untouched", "[trainer]") {
    Rng data_rng(1), init_rng(2);
    const LabeledDataset data = make_two_moons(64, 0.1, data_rng);
    ModelParams params = init_model(2, {8}, 2, 2, 1.0, 10.0, init_rng);
    const std::vector<double> before = flatten_params(params);
    TrainerConfig cfg = small_config();
    cfg.epochs = 0;
    const TrainReport report = train(data, params, cfg);
    CHECK(report.epochs.empty());
    const std::vector<double> after = flatten_params(params);
    REQUIRE(before == after);
}

TEST_CASE("training is bit-deterministic given the seed", "[trainer]") {
    Rng data_rng(11);
    const LabeledDataset data = make_two_moons(96, 0.1, data_rng);
    Rng eval_rng(12);
    const LabeledDataset eval = make_two_moons(40, 0.1, eval_rng);

    auto run = [&] {
        Rng init_rng(5);
        ModelParams params = init_model(2, {8}, 2, 2, 1.0, 10.0, init_rng);
        const TrainReport report = train(data, params, small_config(), &eval);
        return std::pair{flatten_params(params), report};
    };
    const auto [params_a, report_a] = run();
    const auto [params_b, report_b] = run();
    REQUIRE(params_a == params_b);
    REQUIRE(report_a.epochs.size() == report_b.epochs.size());
    for (std::size_t e = 0; e < report_a.epochs.size(); ++e) {
        CHECK(report_a.epochs[e].train_loss == report_b.epochs[e].train_loss);
        CHECK(report_a.epochs[e].test_accuracy == report_b.epochs[e].test_accuracy);
        CHECK(report_a.epochs[e].mean_aleatoric == report_b.epochs[e].mean_aleatoric);
        CHECK(report_a.epochs[e].mean_epistemic == report_b.epochs[e].mean_epistemic);
    }
}

TEST_CASE("adam leaves parameters alone under a zero gradient", "[trainer]") {
    Rng rng(3);
    ModelParams params = init_model(2, {4}, 2, 2, 1.0, 10.0, rng);
    const std::vector<double> before = flatten_params(params);
    ModelParams grads = zeros_like(params);
    detail::AdamState adam(params);
    TrainerConfig cfg = small_config();
    adam.update(params, grads, cfg, cfg.lr);
    adam.update(params, grads, cfg, cfg.lr);
    REQUIRE(flatten_params(params) == before);
}

TEST_CASE("loss trends down on clean two-moons", "[trainer][slow]") {
    Rng data_rng(21);
    const LabeledDataset data = make_two_moons(200, 0.1, data_rng);
    Rng init_rng(22);
    ModelParams params = init_model(2, {16}, 2, 2, 1.0, 10.0, init_rng);
    TrainerConfig cfg = small_config();
    cfg.epochs = 50;
    cfg.batch_size = 32;
    cfg.lr_decay_every = 20;
    const TrainReport report = train(data, params, cfg);
    REQUIRE(report.epochs.size() == 50);
    CHECK(report.epochs[49].train_loss < report.epochs[0].train_loss);
}

TEST_CASE("clean two-moons is separable by a small network", "[trainer][slow]") {
    Rng data_rng(31);
    const LabeledDataset train_set = make_two_moons(400, 0.1, data_rng);
    Rng test_rng(32);
    const LabeledDataset test_set = make_two_moons(400, 0.1, test_rng);
    Rng init_rng(33);
    ModelParams params = init_model(2, {32, 32}, 1, 2, 1.0, 10.0, init_rng);
    TrainerConfig cfg;
    cfg.epochs = 60;
    cfg.batch_size = 64;
    cfg.mixtures = 1;
    cfg.lambda1 = 0.0;
    cfg.lambda2 = 0.0;
    cfg.lr_decay_every = 30;
    cfg.seed = 34;
    train(train_set, params, cfg);
    CHECK(evaluate_accuracy(params, test_set) >= 0.98);
}

TEST_CASE("evaluate_accuracy counts bayes-label hits", "[trainer]") {
    // Heads read the raw 1-D input: mu logits (w x, -w x) split by sign.
    Rng rng(41);
    ModelParams params = init_model(1, {}, 1, 2, 1.0, 10.0, rng);
    params.mu_head.weight.data = {4.0, -4.0};
    params.mu_head.bias = {0.0, 0.0};

    LabeledDataset four;
    four.features = Matrix(4, 1);
    four.features.data = {1.0, 2.0, -1.0, -2.0};
    four.clean_labels = {0, 0, 1, 1};
    four.noisy_labels = four.clean_labels;
    four.num_classes = 2;
    CHECK(evaluate_accuracy(params, four) == 1.0);

    // Constant predictor on a balanced set scores one half.
    for (double* p : param_values(params)) *p = 0.0;
    CHECK(evaluate_accuracy(params, four) == 0.5);

    LabeledDataset unlabeled = four;
    unlabeled.clean_labels.clear();
    CHECK_THROWS_AS(evaluate_accuracy(params, unlabeled), UsageError);
}

TEST_CASE("non-finite loss aborts with a diagnostic", "[trainer]") {
    Rng data_rng(51);
    const LabeledDataset data = make_two_moons(64, 0.1, data_rng);
    Rng init_rng(52);
    ModelParams params = init_model(2, {8}, 2, 2, 1.0, 10.0, init_rng);
    TrainerConfig cfg = small_config();
    cfg.epochs = 3;
    cfg.lr = 1e308;  // drives the weights out of range within a step or two
    CHECK_THROWS_AS(train(data, params, cfg), NumericError);
}

TEST_CASE("trainer validates its configuration", "[trainer]") {
    Rng data_rng(61);
    const LabeledDataset data = make_two_moons(16, 0.1, data_rng);
    Rng init_rng(62);
    ModelParams params = init_model(2, {4}, 2, 2, 1.0, 10.0, init_rng);
    TrainerConfig cfg = small_config();
    cfg.batch_size = 0;
    CHECK_THROWS_AS(train(data, params, cfg), UsageError);
    cfg = small_config();
    cfg.lr_decay_factor = 0.0;
    CHECK_THROWS_AS(train(data, params, cfg), UsageError);
    cfg = small_config();
    const LabeledDataset empty;
    CHECK_THROWS_AS(train(empty, params, cfg), UsageError);
}
