#include "doctest.h"

#include "groupcast/data_model.hpp"

#include <cmath>
#include <set>

using namespace groupcast;
using namespace groupcast::data;

namespace {

Matrix matrix_from(int rows, int cols, const std::vector<double>& values) {
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m.at(r, c) = values[static_cast<size_t>(r) * cols + c];
    return m;
}

ForecastTask simple_task(const std::string& id, const std::vector<double>& target, int horizon) {
    ForecastTask task;
    task.task_id = id;
    task.freq = "D";
    task.horizon = horizon;
    task.targets = matrix_from(static_cast<int>(target.size()), 1, target);
    return task;
}

}  // namespace

TEST_CASE("target encoding smooths category means toward the global mean") {
    SUBCASE("no smoothing gives per-category means") {
        auto [encoded, enc] = encode_categorical_target({"a", "a", "b"}, {1, 3, 10}, 0.0);
        CHECK(encoded == std::vector<double>{2, 2, 10});
        CHECK(enc.fallback == doctest::Approx(14.0 / 3));
    }
    SUBCASE("single category collapses to the global mean") {
        auto [encoded, enc] = encode_categorical_target({"x", "x", "x"}, {1, 2, 6}, 7.0);
        for (double v : encoded) CHECK(v == doctest::Approx(3.0));
    }
    SUBCASE("smoothing formula matches direct evaluation") {
        const std::vector<std::string> cats = {"a", "b", "a", "b"};
        const std::vector<double> target = {0, 4, 2, 6};
        const double m = 2.0;
        auto [encoded, enc] = encode_categorical_target(cats, target, m);
        const double global = 3.0;
        const double a_val = (2 * 1.0 + m * global) / (2 + m);
        const double b_val = (2 * 5.0 + m * global) / (2 + m);
        CHECK(encoded == std::vector<double>{a_val, b_val, a_val, b_val});
    }
    SUBCASE("future rows use the fitted map and unseen categories the fallback") {
        auto [encoded, enc] =
            encode_categorical_target({"a", "b", "a", "zzz"}, {1, 3, 5}, 0.0);
        CHECK(encoded[0] == 3.0);
        CHECK(encoded[3] == doctest::Approx(3.0));  // unseen -> global mean
        CHECK(enc.encode("b") == 3.0);
    }
    SUBCASE("missing targets are excluded from the fit") {
        auto [encoded, enc] = encode_categorical_target({"a", "a"}, {2.0, kMissing}, 0.0);
        CHECK(encoded == std::vector<double>{2, 2});
    }
    SUBCASE("empty history is rejected") {
        CHECK_THROWS_AS(encode_categorical_target({"a"}, {kMissing}, 1.0), Error);
        CHECK_THROWS_AS(encode_categorical_target({"a"}, {}, 1.0), Error);
    }
}

TEST_CASE("ordinal encoding follows first appearance") {
    SUBCASE("basic order") {
        auto [encoded, enc] = encode_categorical_ordinal({"x", "y", "x"});
        CHECK(encoded == std::vector<double>{0, 1, 0});
    }
    SUBCASE("empty input") {
        auto [encoded, enc] = encode_categorical_ordinal({});
        CHECK(encoded.empty());
    }
    SUBCASE("appearance order, not lexicographic") {
        auto [encoded, enc] = encode_categorical_ordinal({"c", "b", "a", "c"});
        CHECK(encoded == std::vector<double>{0, 1, 2, 0});
    }
    SUBCASE("decode round-trips seen categories") {
        auto [encoded, enc] = encode_categorical_ordinal({"p", "q", "r", "q"});
        for (size_t i = 0; i < encoded.size(); ++i) {
            auto back = enc.decode(encoded[i]);
            REQUIRE(back.has_value());
            CHECK(*back == std::vector<std::string>{"p", "q", "r", "q"}[i]);
        }
        CHECK(!enc.decode(99.0).has_value());
    }
}

TEST_CASE("batch assembly assigns group IDs by mode") {
    auto t1 = simple_task("t1", {1, 2, 3}, 2);
    auto t2 = simple_task("t2", {4, 5, 6}, 2);
    auto t3 = simple_task("t3", {7, 8, 9}, 2);

    SUBCASE("univariate gives unique IDs") {
        auto batch = assemble_batch({t1, t2, t3}, InferenceMode::univariate);
        REQUIRE(batch.rows.size() == 3);
        CHECK(batch.rows[0].group_id == 1);
        CHECK(batch.rows[1].group_id == 2);
        CHECK(batch.rows[2].group_id == 3);
    }

    SUBCASE("multivariate shares one ID per task") {
        ForecastTask task = simple_task("m", {1, 2, 3}, 1);
        task.targets = matrix_from(3, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9});
        auto batch = assemble_batch({task}, InferenceMode::multivariate);
        REQUIRE(batch.rows.size() == 3);
        for (const auto& row : batch.rows) CHECK(row.group_id == 1);
    }

    SUBCASE("covariate mode fills known futures and shares the task ID") {
        ForecastTask task = simple_task("c", {1, 2, 3}, 2);
        task.covariates = matrix_from(5, 3, {
            10, 20, 30,
            11, 21, 31,
            12, 22, 32,
            13, 23, 33,
            14, 24, 34,
        });
        task.covariate_roles = {Role::past_only_covariate, Role::known_covariate,
                                Role::known_covariate};
        auto batch = assemble_batch({task}, InferenceMode::covariate_informed);
        REQUIRE(batch.rows.size() == 4);
        std::set<int> ids;
        for (const auto& row : batch.rows) ids.insert(row.group_id);
        CHECK(ids == std::set<int>{1});

        // Past-only covariate future stays missing, known futures are observed.
        CHECK(is_missing(batch.rows[1].values[3]));
        CHECK(batch.rows[2].values[3] == 23);
        CHECK(batch.rows[2].values[4] == 24);
        CHECK(batch.rows[3].values[3] == 33);
        // Target future is always withheld.
        CHECK(is_missing(batch.rows[0].values[3]));
    }

    SUBCASE("multivariate mode withholds known-covariate futures") {
        ForecastTask task = simple_task("c", {1, 2, 3}, 2);
        task.covariates = matrix_from(5, 1, {10, 11, 12, 13, 14});
        task.covariate_roles = {Role::known_covariate};
        auto batch = assemble_batch({task}, InferenceMode::multivariate);
        REQUIRE(batch.rows.size() == 2);
        CHECK(is_missing(batch.rows[1].values[3]));
        CHECK(is_missing(batch.rows[1].values[4]));
        CHECK(batch.rows[1].values[2] == 12);
    }

    SUBCASE("univariate mode drops covariates") {
        ForecastTask task = simple_task("c", {1, 2, 3}, 2);
        task.covariates = matrix_from(5, 1, {10, 11, 12, 13, 14});
        task.covariate_roles = {Role::known_covariate};
        auto batch = assemble_batch({task}, InferenceMode::univariate);
        CHECK(batch.rows.size() == 1);
        CHECK(batch.rows[0].role == Role::target);
    }

    SUBCASE("cross learning uses one ID for everything") {
        ForecastTask multi = simple_task("m", {1, 2, 3}, 2);
        multi.targets = matrix_from(3, 2, {1, 2, 3, 4, 5, 6});
        auto batch = assemble_batch({t1, multi}, InferenceMode::full_cross_learning);
        REQUIRE(batch.rows.size() == 3);
        for (const auto& row : batch.rows) CHECK(row.group_id == 1);
    }

    SUBCASE("cross learning rejects mismatched horizons") {
        auto other = simple_task("x", {1, 2}, 5);
        CHECK_THROWS_AS(assemble_batch({t1, other}, InferenceMode::full_cross_learning), Error);
    }
}

TEST_CASE("batch assembly aligns heterogeneous lengths") {
    auto short_task = simple_task("s", {5, 6}, 1);
    auto long_task = simple_task("l", {1, 2, 3, 4}, 3);
    auto batch = assemble_batch({short_task, long_task}, InferenceMode::univariate);
    CHECK(batch.t == 4);
    CHECK(batch.h == 3);
    REQUIRE(batch.rows.size() == 2);

    const auto& s = batch.rows[0];
    CHECK(s.orig_t == 2);
    CHECK(s.orig_h == 1);
    CHECK(is_missing(s.values[0]));
    CHECK(is_missing(s.values[1]));
    CHECK(s.values[2] == 5);
    CHECK(s.values[3] == 6);
    for (int i = 4; i < 7; ++i) CHECK(is_missing(s.values[static_cast<size_t>(i)]));

    const auto& l = batch.rows[1];
    CHECK(l.values[0] == 1);
    CHECK(l.values[3] == 4);
}

TEST_CASE("batch assembly is order-stable under task permutation") {
    auto t1 = simple_task("a", {1, 2}, 1);
    ForecastTask t2 = simple_task("b", {3, 4, 5}, 1);
    t2.targets = matrix_from(3, 2, {3, 4, 5, 6, 7, 8});
    auto t3 = simple_task("c", {9}, 1);

    auto fwd = assemble_batch({t1, t2, t3}, InferenceMode::multivariate);
    auto rev = assemble_batch({t3, t2, t1}, InferenceMode::multivariate);
    REQUIRE(fwd.rows.size() == rev.rows.size());

    // Row for (task, dim) must carry identical values either way; group IDs
    // relabel bijectively (task order determines the labels).
    auto find_row = [](const GroupedBatch& b, int task, int dim) {
        for (const auto& row : b.rows)
            if (row.task_index == task && row.dim_index == dim) return row;
        REQUIRE(false);
        return b.rows[0];
    };
    // t2 is task 1 in both orderings.
    auto same_values = [](const std::vector<double>& a, const std::vector<double>& b) {
        if (a.size() != b.size()) return false;
        for (size_t i = 0; i < a.size(); ++i) {
            if (is_missing(a[i]) != is_missing(b[i])) return false;
            if (!is_missing(a[i]) && a[i] != b[i]) return false;
        }
        return true;
    };
    for (int d = 0; d < 2; ++d) {
        auto f = find_row(fwd, 1, d);
        auto r = find_row(rev, 1, d);
        CHECK(same_values(f.values, r.values));
    }
    CHECK(fwd.rows[0].group_id == 1);
    CHECK(rev.rows[0].group_id == 1);
    CHECK(find_row(fwd, 1, 0).group_id == 2);
    CHECK(find_row(rev, 1, 0).group_id == 2);

    // Every row belongs to exactly one group and groups partition the batch.
    std::set<int> groups;
    for (const auto& row : fwd.rows) groups.insert(row.group_id);
    CHECK(groups == std::set<int>{1, 2, 3});
}

TEST_CASE("task validation reports invariant violations") {
    SUBCASE("well-formed task passes") {
        ForecastTask task = simple_task("ok", {1, 2, 3}, 2);
        task.covariates = matrix_from(5, 1, {1, 2, 3, 4, 5});
        task.covariate_roles = {Role::known_covariate};
        CHECK(validate_task(task).empty());
    }
    SUBCASE("missing known-covariate future") {
        ForecastTask task = simple_task("bad", {1, 2, 3}, 2);
        task.covariates = matrix_from(5, 1, {1, 2, 3, kMissing, 5});
        task.covariate_roles = {Role::known_covariate};
        auto diags = validate_task(task);
        REQUIRE(diags.size() == 1);
        CHECK(diags[0].find("missing future") != std::string::npos);
    }
    SUBCASE("zero horizon") {
        ForecastTask task = simple_task("h0", {1, 2}, 0);
        auto diags = validate_task(task);
        REQUIRE(diags.size() == 1);
        CHECK(diags[0] == "horizon must be positive");
    }
}

TEST_CASE("inference mode names round-trip") {
    for (auto mode : {InferenceMode::univariate, InferenceMode::multivariate,
                      InferenceMode::covariate_informed, InferenceMode::full_cross_learning})
        CHECK(parse_mode(mode_name(mode)) == mode);
    CHECK_THROWS_AS(parse_mode("bogus"), Error);
}
