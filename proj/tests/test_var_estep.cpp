#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <random>
#include <set>

#include "support.hpp"
#include "trunccluster/datagen.hpp"
#include "trunccluster/gmm_em.hpp"
#include "trunccluster/var_estep.hpp"

using namespace trunccluster;

namespace {

std::vector<int> row_vec(std::span<const int> r) { return {r.begin(), r.end()}; }

bool contains(std::span<const int> r, int x) { return std::find(r.begin(), r.end(), x) != r.end(); }

// Keys of the k smallest (distance, key) pairs by full sort, returned sorted by key.
std::vector<int> full_sort_select(std::vector<std::pair<long double, int>> v, std::size_t k) {
    std::sort(v.begin(), v.end());
    std::vector<int> out;
    for (std::size_t i = 0; i < std::min(k, v.size()); ++i) out.push_back(v[i].second);
    std::sort(out.begin(), out.end());
    return out;
}

struct Instance {
    oracle::Dense points, means;
    Dataset data;
    ModelParams params;
};

Instance random_instance(std::size_t n, std::size_t c, std::size_t d, std::uint64_t seed) {
    auto p = oracle::random_matrix(n, d, seed);
    auto m = oracle::random_matrix(c, d, seed ^ 0xABCDEF);
    Dataset data(oracle::to_matrix(p));
    return {p, m, data, ModelParams{oracle::to_matrix(m), 1.0}};
}

}  // namespace

TEST_CASE("init_truncation: structure, saturation, determinism and argument checks") {
    auto [trunc, nbrs] = init_truncation(1000, 100, 3, 5, 42);
    REQUIRE(trunc.sets.rows() == 1000);
    REQUIRE(trunc.sets.width() == 3);
    CHECK_FALSE(trunc.has_distances());
    for (std::size_t n = 0; n < 1000; ++n) {
        const auto r = row_vec(trunc.sets.row(n));
        CHECK(std::set<int>(r.begin(), r.end()).size() == 3);
        CHECK(std::is_sorted(r.begin(), r.end()));
        for (int c : r) CHECK((c >= 0 && c < 100));
    }
    REQUIRE(nbrs.sets.rows() == 100);
    REQUIRE(nbrs.sets.width() == 5);
    CHECK(nbrs.provenance == NeighborIndex::Provenance::random);
    for (std::size_t c = 0; c < 100; ++c) {
        const auto r = row_vec(nbrs.sets.row(c));
        CHECK(std::set<int>(r.begin(), r.end()).size() == 5);
        CHECK(contains(nbrs.sets.row(c), static_cast<int>(c)));
        for (int x : r) CHECK((x >= 0 && x < 100));
    }

    auto [t2, n2] = init_truncation(1000, 100, 3, 5, 42);
    CHECK(t2.sets == trunc.sets);
    CHECK(n2.sets == nbrs.sets);
    auto [t3, n3] = init_truncation(1000, 100, 3, 5, 43);
    CHECK_FALSE(t3.sets == trunc.sets);

    auto [ts, ns] = init_truncation(10, 6, 6, 6, 1);
    for (std::size_t n = 0; n < 10; ++n) CHECK(row_vec(ts.sets.row(n)) == std::vector<int>{0, 1, 2, 3, 4, 5});
    for (std::size_t c = 0; c < 6; ++c) CHECK(row_vec(ns.sets.row(c)) == std::vector<int>{0, 1, 2, 3, 4, 5});

    CHECK_THROWS_AS(init_truncation(10, 5, 3, 2, 1), std::invalid_argument);
    CHECK_THROWS_AS(init_truncation(10, 5, 0, 2, 1), std::invalid_argument);
    CHECK_THROWS_AS(init_truncation(10, 5, 1, 6, 1), std::invalid_argument);

    // Initial draws are roughly uniform over clusters.
    std::vector<int> hits(100, 0);
    for (std::size_t n = 0; n < 1000; ++n)
        for (int c : trunc.sets.row(n)) ++hits[c];
    CHECK(*std::min_element(hits.begin(), hits.end()) > 5);
    CHECK(*std::max_element(hits.begin(), hits.end()) < 70);
}

TEST_CASE("exhaustive neighbors: G=1, grid geometry and full-sort agreement") {
    DistanceCounter counter;
    const auto inst = random_instance(5, 12, 3, 5);
    auto nbrs = exhaustive_neighbors(inst.params, 1, counter);
    CHECK(counter.cluster_to_cluster == 144);
    CHECK(counter.data_to_cluster == 0);
    CHECK(nbrs.provenance == NeighborIndex::Provenance::exhaustive);
    for (std::size_t c = 0; c < 12; ++c) CHECK(row_vec(nbrs.sets.row(c)) == std::vector<int>{static_cast<int>(c)});

    BirchSpec spec;
    spec.grid_side = 5;
    spec.samples_per_cluster = 1;
    const auto birch = generate_birch(spec);
    counter.reset();
    nbrs = exhaustive_neighbors(ModelParams{birch.centers, 1.0}, 5, counter);
    CHECK(counter.cluster_to_cluster == 625);
    for (int i = 1; i < 4; ++i)
        for (int j = 1; j < 4; ++j) {
            const int c = i * 5 + j;
            CHECK(row_vec(nbrs.sets.row(c)) == std::vector<int>{c - 5, c - 1, c, c + 1, c + 5});
        }

    for (std::size_t g = 1; g <= 12; ++g) {
        nbrs = exhaustive_neighbors(inst.params, g, counter);
        for (std::size_t c = 0; c < 12; ++c) {
            std::vector<std::pair<long double, int>> row;
            for (std::size_t o = 0; o < 12; ++o)
                row.push_back({o == c ? -1.0L : oracle::dist(inst.means[c], inst.means[o]), static_cast<int>(o)});
            CHECK(row_vec(nbrs.sets.row(c)) == full_sort_select(row, g));
        }
    }
}

TEST_CASE("update_truncation: free energy never drops, sets stay in the search space") {
    std::mt19937_64 gen(5);
    for (std::uint64_t s = 0; s < 50; ++s) {
        const std::size_t n_clusters = 4 + s % 9;
        const std::size_t c_prime = 1 + s % 3;
        const std::size_t g = std::min(n_clusters, c_prime + s % 4);
        auto inst = random_instance(60, n_clusters, 2, 100 + s);
        inst.params.sigma_sq = 0.5 + static_cast<double>(s % 5);
        auto [trunc, nbrs] = init_truncation(60, n_clusters, c_prime, g, s);
        const bool explore = s % 2 == 0;
        DistanceCounter counter, eval;
        for (int step = 0; step < 3; ++step) {
            const double before = truncated_free_energy(inst.data, trunc.sets, inst.params, eval);
            counter.reset();
            auto up = update_truncation(inst.data, inst.params, trunc, nbrs, explore, gen(), counter);
            const double after = truncated_free_energy(inst.data, up.trunc.sets, inst.params, eval);
            CHECK(after >= before - 1e-10);
            CHECK(std::fabs(truncated_free_energy_cached(up.trunc.distances, c_prime, n_clusters, 2,
                                                         inst.params.sigma_sq) -
                            after) <= 1e-9);

            std::uint64_t expected_evals = 0;
            for (std::size_t n = 0; n < 60; ++n) {
                const auto space = up.search.point_ids(n);
                expected_evals += space.size();
                CHECK(std::set<int>(space.begin(), space.end()).size() == space.size());
                CHECK(space.size() <= c_prime * g + (explore ? 1 : 0));
                std::set<int> uni;
                for (int c : trunc.sets.row(n))
                    for (int x : nbrs.sets.row(c)) uni.insert(x);
                const int extra = up.search.exploratory[n];
                if (explore && uni.size() < n_clusters) {
                    CHECK(extra >= 0);
                    CHECK(uni.count(extra) == 0);
                    uni.insert(extra);
                } else {
                    CHECK(extra == -1);
                }
                CHECK(std::set<int>(space.begin(), space.end()) == uni);
                for (int c : trunc.sets.row(n)) CHECK(contains(space, c));
                for (int c : up.trunc.sets.row(n)) CHECK(contains(space, c));
                // Search-space distances are the true ones.
                for (std::size_t i = 0; i < space.size(); ++i)
                    CHECK(std::fabs(up.search.point_distances(n)[i] -
                                    static_cast<double>(oracle::dist(inst.points[n], inst.means[space[i]]))) <= 1e-12);
                // The largest kept distance can only shrink.
                if (trunc.has_distances()) {
                    const auto od = trunc.point_distances(n), nd = up.trunc.point_distances(n);
                    CHECK(*std::max_element(nd.begin(), nd.end()) <= *std::max_element(od.begin(), od.end()));
                }
            }
            CHECK(counter.data_to_cluster == expected_evals);
            CHECK(counter.cluster_to_cluster == 0);
            trunc = std::move(up.trunc);
        }
    }
}

TEST_CASE("update_truncation: full coverage finds the true nearest clusters; fixed point") {
    const auto inst = random_instance(80, 7, 3, 9);
    DistanceCounter counter;
    auto [trunc, nbrs] = init_truncation(80, 7, 2, 7, 3);
    auto up = update_truncation(inst.data, inst.params, trunc, nbrs, false, 0, counter);
    for (std::size_t n = 0; n < 80; ++n) {
        std::vector<std::pair<long double, int>> row;
        for (int c = 0; c < 7; ++c) row.push_back({oracle::dist(inst.points[n], inst.means[c]), c});
        CHECK(row_vec(up.trunc.sets.row(n)) == full_sort_select(row, 2));
    }
    CHECK(counter.data_to_cluster == 80 * 7);
    auto again = update_truncation(inst.data, inst.params, up.trunc, nbrs, false, 0, counter);
    CHECK(again.trunc.sets == up.trunc.sets);
    CHECK(again.trunc.distances == up.trunc.distances);

    // With G_c = {c} and C' = 1 the search space is K(n) itself.
    auto [t1, n1] = init_truncation(80, 7, 1, 1, 4);
    auto same = update_truncation(inst.data, inst.params, t1, n1, false, 0, counter);
    CHECK(same.trunc.sets == t1.sets);

    // A neighborhood that omits its own cluster breaks K(n) in G(n).
    NeighborIndex broken{SetTable(7, 1), NeighborIndex::Provenance::random};
    for (std::size_t c = 0; c < 7; ++c) broken.sets.row(c)[0] = static_cast<int>((c + 1) % 7);
    CHECK_THROWS_AS(update_truncation(inst.data, inst.params, t1, broken, false, 0, counter), std::logic_error);

    // Agrees with full_truncation on the C' nearest.
    const auto full = full_truncation(inst.data, inst.params, 2, counter);
    CHECK(full.sets == up.trunc.sets);
    const auto lloyd = full_truncation(inst.data, inst.params, 1, counter);
    for (std::size_t n = 0; n < 80; ++n) CHECK(lloyd.sets.row(n)[0] == oracle::nearest(inst.points[n], inst.means));
}

TEST_CASE("estimate_neighbors matches a three-loop accumulator") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t N = 40, C = 8, Cp = 2, G = 3;
        const auto inst = random_instance(N, C, 2, 700 + seed);
        auto [trunc, nbrs] = init_truncation(N, C, Cp, G, seed);
        DistanceCounter counter;
        const auto up = update_truncation(inst.data, inst.params, trunc, nbrs, seed % 2 == 1, seed, counter);
        const auto est = estimate_neighbors(up.search, C, G, &nbrs, seed);
        const auto& s = up.search;

        // c_o(n) with ties to the smaller id.
        std::vector<int> nearest(N);
        for (std::size_t n = 0; n < N; ++n) {
            int best = -1;
            double bd = INFINITY;
            for (std::size_t i = 0; i < s.point_ids(n).size(); ++i) {
                const int c = s.point_ids(n)[i];
                const double d = s.point_distances(n)[i];
                if (d < bd || (d == bd && c < best)) {
                    bd = d;
                    best = c;
                }
            }
            nearest[n] = best;
        }
        CHECK(est.assign.nearest == nearest);

        std::vector<std::vector<long double>> sum(C, std::vector<long double>(C, 0));
        std::vector<std::vector<int>> count(C, std::vector<int>(C, 0));
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t n = 0; n < N; ++n) {
                if (nearest[n] != static_cast<int>(c)) continue;
                for (std::size_t i = 0; i < s.point_ids(n).size(); ++i) {
                    sum[c][s.point_ids(n)[i]] += s.point_distances(n)[i];
                    ++count[c][s.point_ids(n)[i]];
                }
            }

        std::size_t n_pairs = 0;
        for (std::size_t c = 0; c < C; ++c) {
            std::map<int, AssignmentIndex::PairStat> got;
            for (const auto& p : est.assign.pairs_of(c)) {
                CHECK(p.count >= 1);
                got[p.other] = p;
            }
            for (std::size_t o = 0; o < C; ++o) {
                if (count[c][o] == 0) {
                    CHECK(got.count(static_cast<int>(o)) == 0);
                    continue;
                }
                ++n_pairs;
                REQUIRE(got.count(static_cast<int>(o)) == 1);
                const auto& p = got[static_cast<int>(o)];
                CHECK(p.count == static_cast<std::uint32_t>(count[c][o]));
                const double expected = static_cast<double>(sum[c][o] / count[c][o]);
                CHECK(std::fabs(p.estimate() - expected) <= 1e-12 * std::max(1.0, expected));
            }

            // G_c: c, then the smallest finite estimates; shortfall is filled from the previous G_c.
            std::vector<std::pair<long double, int>> finite;
            for (std::size_t o = 0; o < C; ++o)
                if (o != c && count[c][o] > 0) finite.push_back({sum[c][o] / count[c][o], static_cast<int>(o)});
            std::sort(finite.begin(), finite.end());
            std::vector<int> expected{static_cast<int>(c)};
            for (std::size_t i = 0; i < finite.size() && expected.size() < G; ++i) expected.push_back(finite[i].second);
            for (int prev : nbrs.sets.row(c))
                if (expected.size() < G && std::find(expected.begin(), expected.end(), prev) == expected.end())
                    expected.push_back(prev);
            std::sort(expected.begin(), expected.end());
            CHECK(row_vec(est.nbrs.sets.row(c)) == expected);
        }
        CHECK(est.assign.pairs.size() == n_pairs);
        CHECK(est.nbrs.provenance == NeighborIndex::Provenance::estimated);

        // I_c partition {0..N-1}.
        std::vector<int> seen(N, 0);
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t n : est.assign.members_of(c)) {
                ++seen[n];
                CHECK(nearest[n] == static_cast<int>(c));
            }
        CHECK(std::all_of(seen.begin(), seen.end(), [](int x) { return x == 1; }));
    }
}

TEST_CASE("estimate_neighbors is exact when points sit on the means") {
    const auto means = oracle::random_matrix(6, 3, 17);
    oracle::Dense pts;
    for (int rep = 0; rep < 4; ++rep)
        for (const auto& m : means) pts.push_back(m);
    const Dataset data(oracle::to_matrix(pts));
    const ModelParams params{oracle::to_matrix(means), 1.0};
    // Every K(n) holds the point's own cluster, so every I_c member sits on mu_c.
    auto [trunc, nbrs] = init_truncation(pts.size(), 6, 2, 3, 8);
    for (std::size_t n = 0; n < pts.size(); ++n) {
        const int own = static_cast<int>(n % 6), other = static_cast<int>((n + 1 + n / 6) % 6);
        trunc.sets.row(n)[0] = std::min(own, other);
        trunc.sets.row(n)[1] = std::max(own, other);
    }
    DistanceCounter counter;
    const auto up = update_truncation(data, params, trunc, nbrs, true, 3, counter);
    for (std::size_t n = 0; n < pts.size(); ++n) REQUIRE(contains(up.search.point_ids(n), static_cast<int>(n % 6)));
    const auto est = estimate_neighbors(up.search, 6, 3, &nbrs, 1);
    std::size_t observed = 0;
    for (std::size_t c = 0; c < 6; ++c)
        for (const auto& p : est.assign.pairs_of(c)) {
            const double truth = static_cast<double>(oracle::dist(means[c], means[p.other]));
            CHECK(std::fabs(p.estimate() - truth) <= 1e-12 * std::max(1.0, truth));
            ++observed;
        }
    CHECK(observed > 6);
}

TEST_CASE("estimate_neighbors ignores unobserved pairs and fills shortfalls") {
    SearchSpace s;
    s.ids = {0, 1, 2, 3};
    s.distances = {0.1, 1e300, 0.2, 0.5};
    s.offsets = {0, 2, 4};
    s.exploratory = {-1, -1};

    auto est = estimate_neighbors(s, 5, 2, nullptr, 7);
    CHECK(row_vec(est.nbrs.sets.row(0)) == std::vector<int>{0, 1});  // far but observed beats unobserved
    CHECK(row_vec(est.nbrs.sets.row(2)) == std::vector<int>{2, 3});
    for (std::size_t c = 0; c < 5; ++c) {
        CHECK(contains(est.nbrs.sets.row(c), static_cast<int>(c)));
        const auto r = row_vec(est.nbrs.sets.row(c));
        CHECK(std::set<int>(r.begin(), r.end()).size() == 2);
    }
    CHECK(est.assign.members_of(1).empty());
    CHECK(est.assign.pairs_of(1).empty());

    // Clusters without observations keep their previous neighborhood.
    NeighborIndex prev{SetTable(5, 3), NeighborIndex::Provenance::estimated};
    const int rows[5][3] = {{0, 3, 4}, {1, 2, 4}, {0, 2, 4}, {1, 3, 4}, {0, 1, 4}};
    for (std::size_t c = 0; c < 5; ++c) std::copy(rows[c], rows[c] + 3, prev.sets.row(c).begin());
    est = estimate_neighbors(s, 5, 3, &prev, 7);
    CHECK(row_vec(est.nbrs.sets.row(0)) == std::vector<int>{0, 1, 3});
    CHECK(row_vec(est.nbrs.sets.row(1)) == std::vector<int>{1, 2, 4});
    CHECK(row_vec(est.nbrs.sets.row(4)) == std::vector<int>{0, 1, 4});

    // Random fill is reproducible.
    CHECK(estimate_neighbors(s, 5, 2, nullptr, 7).nbrs.sets == estimate_neighbors(s, 5, 2, nullptr, 7).nbrs.sets);
    CHECK_THROWS_AS(estimate_neighbors(s, 5, 6, nullptr, 7), std::invalid_argument);
}

TEST_CASE("truncated responsibilities") {
    const auto inst = random_instance(30, 5, 3, 21);
    auto params = inst.params;
    params.sigma_sq = 0.6;
    DistanceCounter counter;
    auto [trunc, nbrs] = init_truncation(30, 5, 5, 5, 1);
    CHECK_THROWS_AS(truncated_responsibilities(trunc, 1.0), std::logic_error);
    const auto up = update_truncation(inst.data, params, trunc, nbrs, false, 0, counter);
    const auto sparse = truncated_responsibilities(up.trunc, params.sigma_sq);
    const auto full = full_estep(inst.data, params, counter);
    for (std::size_t n = 0; n < 30; ++n) {
        REQUIRE(sparse.point(n).size() == 5);
        for (std::size_t i = 0; i < 5; ++i) {
            CHECK(sparse.point(n)[i].cluster == full.point(n)[i].cluster);
            CHECK(std::fabs(sparse.point(n)[i].weight - full.point(n)[i].weight) <= 1e-12);
        }
    }

    auto [t1, n1] = init_truncation(30, 5, 1, 3, 2);
    const auto hard = truncated_responsibilities(update_truncation(inst.data, params, t1, n1, false, 0, counter).trunc,
                                                 params.sigma_sq);
    for (std::size_t n = 0; n < 30; ++n) {
        REQUIRE(hard.point(n).size() == 1);
        CHECK(hard.point(n)[0].weight == 1.0);
    }

    TruncationState pair{SetTable(1, 2), {2.0, 2.0}};
    pair.sets.row(0)[0] = 0;
    pair.sets.row(0)[1] = 3;
    const auto half = truncated_responsibilities(pair, 1.0);
    CHECK(half.point(0)[0].weight == 0.5);
    CHECK(half.point(0)[1].weight == 0.5);
}

TEST_CASE("exhaustive and estimated paths agree at saturation") {
    const auto inst = random_instance(50, 6, 2, 33);
    DistanceCounter counter;
    auto [trunc, nbrs] = init_truncation(50, 6, 6, 6, 1);
    const auto x_nbrs = exhaustive_neighbors(inst.params, 6, counter);
    const auto via_x = update_truncation(inst.data, inst.params, trunc, x_nbrs, false, 0, counter);
    const auto s_nbrs = estimate_neighbors(via_x.search, 6, 6, &nbrs, 0).nbrs;
    const auto via_s = update_truncation(inst.data, inst.params, trunc, s_nbrs, false, 0, counter);
    CHECK(via_x.trunc.sets == via_s.trunc.sets);
    CHECK(via_x.trunc.distances == via_s.trunc.distances);
}

TEST_CASE("parallel partial E-steps are bit-identical to serial ones") {
    const auto inst = random_instance(5000, 30, 2, 55);
    auto [trunc, nbrs] = init_truncation(5000, 30, 2, 4, 6);
    DistanceCounter c1, c4;
    const auto a = update_truncation(inst.data, inst.params, trunc, nbrs, true, 77, c1, Executor{1});
    const auto b = update_truncation(inst.data, inst.params, trunc, nbrs, true, 77, c4, Executor{4});
    CHECK(a.trunc.sets == b.trunc.sets);
    CHECK(a.trunc.distances == b.trunc.distances);
    CHECK(a.search.ids == b.search.ids);
    CHECK(c1 == c4);
    const auto ea = estimate_neighbors(a.search, 30, 4, &nbrs, 1, Executor{1});
    const auto eb = estimate_neighbors(b.search, 30, 4, &nbrs, 1, Executor{4});
    CHECK(ea.nbrs.sets == eb.nbrs.sets);
    CHECK(ea.assign.pairs.size() == eb.assign.pairs.size());
    for (std::size_t i = 0; i < ea.assign.pairs.size(); ++i)
        CHECK(ea.assign.pairs[i].distance_sum == eb.assign.pairs[i].distance_sum);
}
