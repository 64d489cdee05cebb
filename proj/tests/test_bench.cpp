#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "trunccluster/bench.hpp"

using namespace trunccluster;

TEST_CASE("mean and standard error") {
    const auto m = mean_sem({1.0, 2.0, 3.0, 4.0});
    CHECK(m.mean == 2.5);
    CHECK(m.sem == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
    CHECK(mean_sem({7.0}).sem == 0.0);
    CHECK(mean_sem({}).mean == 0.0);
}

TEST_CASE("bench report structure and reproducibility") {
    BenchConfig cfg;
    cfg.sides = {3, 4};
    cfg.seeds = 2;
    cfg.variants = {{Algorithm::var_kmeans_s, 3}, {Algorithm::var_gmm_s, 2}};
    cfg.max_iters = 60;
    RunOptions opt;
    opt.record_wall_time = false;
    const auto report = run_bench(cfg, opt);
    REQUIRE(report.sizes.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& s = report.sizes[i];
        CHECK(s.side == cfg.sides[i]);
        CHECK(s.n_clusters == s.side * s.side);
        CHECK(s.n_points == s.n_clusters * 100);
        CHECK(s.baseline_traces.size() == 2);
        CHECK(s.baseline_evals_per_iteration == doctest::Approx(static_cast<double>(s.n_points * s.n_clusters)));
        REQUIRE(s.variants.size() == 2);
        for (const auto& v : s.variants) {
            CHECK(v.traces.size() == 2);
            CHECK(v.per_seed_parity.size() == 2);
            CHECK(v.explore);
            CHECK(v.initial_esteps == 0);
            CHECK(v.speedup_measured.mean >= v.speedup_theoretical);
        }
        CHECK(s.variants[0].c_prime == 1);
        CHECK(s.variants[1].c_prime == 2);
        CHECK(s.variants[0].speedup_theoretical == doctest::Approx(static_cast<double>(s.n_clusters) / 4.0));
    }
    const auto j = bench_to_json(report);
    CHECK(j.at("schema") == 1);
    CHECK(j.at("sizes").size() == 2);
    CHECK(j.at("sizes")[0].at("variants").size() == 2);
    CHECK(bench_to_json(run_bench(cfg, opt)).dump() == j.dump());

    cfg.suite = "unknown";
    CHECK_THROWS_AS(run_bench(cfg, opt), std::invalid_argument);
}

TEST_CASE("unreached parity is serialized as null with a flag") {
    BenchConfig cfg;
    cfg.sides = {4};
    cfg.seeds = 2;
    cfg.variants = {{Algorithm::var_kmeans_s, 2}};
    cfg.explore = false;
    cfg.max_iters = 1;
    RunOptions opt;
    opt.record_wall_time = false;
    const auto j = bench_to_json(run_bench(cfg, opt));
    const auto& v = j.at("sizes")[0].at("variants")[0];
    CHECK(v.at("parity_iteration").is_null());
    CHECK(v.at("parity_reached") == false);
    CHECK(v.at("all_seeds_reached_parity") == false);
    CHECK(v.at("per_seed_parity")[0].is_null());
}
