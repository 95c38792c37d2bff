#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <random>

#include "convocode/agreement.hpp"
#include "convocode/errors.hpp"
#include "test_util.hpp"

using namespace convocode;

namespace {

// Independent kappa oracle: exhaustive counting of matches and per-category
// marginals, no shared code with the implementation.
double kappa_oracle(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    const double n = static_cast<double>(a.size());
    double p_o = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] == b[i]) p_o += 1.0;
    p_o /= n;

    std::vector<std::string> categories;
    for (const auto& label : a) categories.push_back(label);
    for (const auto& label : b) categories.push_back(label);
    std::sort(categories.begin(), categories.end());
    categories.erase(std::unique(categories.begin(), categories.end()), categories.end());

    double p_e = 0.0;
    for (const auto& category : categories) {
        double ca = 0.0, cb = 0.0;
        for (const auto& label : a)
            if (label == category) ca += 1.0;
        for (const auto& label : b)
            if (label == category) cb += 1.0;
        p_e += (ca / n) * (cb / n);
    }
    return (p_o - p_e) / (1.0 - p_e);
}

}  // namespace

TEST_CASE("cohens_kappa matches the hand-computed fixture") {
    const KappaResult r = cohens_kappa({"x", "x", "y", "y", "y"}, {"x", "y", "y", "y", "y"});
    CHECK(r.observed_agreement == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(r.expected_agreement == doctest::Approx(0.56).epsilon(1e-12));
    CHECK(r.kappa == doctest::Approx(0.24 / 0.44).epsilon(1e-9));
    CHECK(r.n == 5);
}

TEST_CASE("cohens_kappa perfect and chance-level agreement") {
    const std::vector<std::string> mixed = {"x", "y", "x", "z"};
    CHECK(cohens_kappa(mixed, mixed).kappa == 1.0);

    // Uniform marginals, half agreement: exactly chance level.
    CHECK(cohens_kappa({"x", "x", "y", "y"}, {"x", "y", "x", "y"}).kappa == 0.0);
}

TEST_CASE("cohens_kappa rejects degenerate and mismatched input") {
    CHECK_THROWS_AS(cohens_kappa({"x", "x"}, {"x", "x"}), DomainError);
    CHECK_THROWS_AS(cohens_kappa({"x"}, {"x", "y"}), DomainError);
    CHECK_THROWS_AS(cohens_kappa({}, {}), DomainError);
}

TEST_CASE("kappa is symmetric and relabeling-invariant") {
    std::mt19937 rng(11);
    const std::string labels[3] = {"a", "b", "c"};
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 2 + rng() % 8;
        std::vector<std::string> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = labels[rng() % 3];
            b[i] = labels[rng() % 3];
        }
        KappaResult fwd, rev;
        try {
            fwd = cohens_kappa(a, b);
            rev = cohens_kappa(b, a);
        } catch (const DomainError&) {
            continue;  // degenerate draw
        }
        CHECK(fwd.kappa == doctest::Approx(rev.kappa).epsilon(1e-12));

        // Relabel through a bijection.
        const std::map<std::string, std::string> relabel = {{"a", "q"}, {"b", "r"}, {"c", "s"}};
        std::vector<std::string> a2(n), b2(n);
        for (std::size_t i = 0; i < n; ++i) {
            a2[i] = relabel.at(a[i]);
            b2[i] = relabel.at(b[i]);
        }
        CHECK(cohens_kappa(a2, b2).kappa == doctest::Approx(fwd.kappa).epsilon(1e-12));
    }
}

TEST_CASE("kappa agrees with the brute-force oracle on random draws") {
    std::mt19937 rng(13);
    const std::string labels[3] = {"a", "b", "c"};
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t n = 1 + rng() % 6;
        std::vector<std::string> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = labels[rng() % 3];
            b[i] = labels[rng() % 3];
        }
        try {
            const KappaResult r = cohens_kappa(a, b);
            CHECK(r.kappa == doctest::Approx(kappa_oracle(a, b)).epsilon(1e-12));
        } catch (const DomainError&) {
            // oracle would divide by zero too
        }
    }
}

TEST_CASE("consensus resolves strict majorities without arbitration") {
    std::vector<LabelledInstance> instances = {
        {"i1", {{"c1", "KC"}, {"c2", "KC"}, {"c3", "LMC"}, {"c4", "KC"}}}};
    bool arbitrated = false;
    ConsensusPolicy policy;
    policy.arbitration = [&](const LabelledInstance&, const std::vector<std::string>& tied) {
        arbitrated = true;
        return tied.front();
    };
    const auto result = consensus(instances, policy);
    CHECK(result.at("i1") == "KC");
    CHECK_FALSE(arbitrated);
}

TEST_CASE("consensus invokes arbitration exactly once per tie") {
    std::vector<LabelledInstance> instances = {
        {"i1", {{"c1", "KC"}, {"c2", "KC"}, {"c3", "LMC"}, {"c4", "LMC"}}}};
    int calls = 0;
    ConsensusPolicy policy;
    policy.arbitration = [&](const LabelledInstance&, const std::vector<std::string>& tied) {
        ++calls;
        REQUIRE(tied.size() == 2);
        return std::string("LMC");
    };
    const auto result = consensus(instances, policy);
    CHECK(result.at("i1") == "LMC");
    CHECK(calls == 1);
}

TEST_CASE("consensus of a single coder is that coder's label") {
    const auto result = consensus({{"i1", {{"c1", "FC"}}}}, {});
    CHECK(result.at("i1") == "FC");
}

TEST_CASE("consensus rejects arbitration outside the tied set and unconfigured ties") {
    std::vector<LabelledInstance> instances = {{"i1", {{"c1", "KC"}, {"c2", "LMC"}}}};
    ConsensusPolicy bad;
    bad.arbitration = [](const LabelledInstance&, const std::vector<std::string>&) {
        return std::string("FC");
    };
    CHECK_THROWS_AS(consensus(instances, bad), ContractError);
    CHECK_THROWS_AS(consensus(instances, {}), ContractError);
}

TEST_CASE("consensus property: result always has at least one vote") {
    std::mt19937 rng(17);
    const std::string labels[4] = {"KC", "LMC", "FC", "RC"};
    for (int trial = 0; trial < 2000; ++trial) {
        LabelledInstance instance;
        instance.instance_id = "i";
        const std::size_t coders = 1 + rng() % 6;
        for (std::size_t c = 0; c < coders; ++c)
            instance.labels_by_coder["c" + std::to_string(c)] = labels[rng() % 4];

        ConsensusPolicy policy;
        policy.arbitration = [&rng](const LabelledInstance&,
                                    const std::vector<std::string>& tied) {
            return tied[rng() % tied.size()];
        };
        const auto result = consensus({instance}, policy);
        const std::string& chosen = result.at("i");
        int votes = 0;
        for (const auto& [coder, label] : instance.labels_by_coder)
            if (label == chosen) ++votes;
        CHECK(votes >= 1);
    }
}

TEST_CASE("confusion_matrix identity and hand-tallied fixtures") {
    const std::vector<std::string> items = {"A", "B", "A", "B", "A", "A", "B", "A", "B", "A"};
    const ConfusionMatrix identity = confusion_matrix(items, items, {"A", "B"});
    CHECK(identity.trace() == 10);
    CHECK(identity.total() == 10);
    CHECK(identity.counts[0][1] == 0);

    const ConfusionMatrix m = confusion_matrix({"A", "A", "B"}, {"A", "B", "B"}, {"A", "B"});
    CHECK(m.counts == std::vector<std::vector<long>>{{1, 1}, {0, 1}});
}

TEST_CASE("confusion_matrix rejects out-of-category labels") {
    CHECK_THROWS_AS(confusion_matrix({"A", "Z"}, {"A", "A"}, {"A", "B"}), DomainError);
}

TEST_CASE("confusion_matrix marginals equal the label histograms") {
    std::mt19937 rng(19);
    const std::vector<std::string> categories = {"A", "B", "C"};
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 30;
        std::vector<std::string> ref(n), pred(n);
        std::map<std::string, long> ref_hist, pred_hist;
        for (std::size_t i = 0; i < n; ++i) {
            ref[i] = categories[rng() % 3];
            pred[i] = categories[rng() % 3];
            ++ref_hist[ref[i]];
            ++pred_hist[pred[i]];
        }
        const ConfusionMatrix m = confusion_matrix(ref, pred, categories);
        for (std::size_t i = 0; i < 3; ++i) {
            long row = 0, col = 0;
            for (std::size_t j = 0; j < 3; ++j) {
                row += m.counts[i][j];
                col += m.counts[j][i];
            }
            CHECK(row == ref_hist[categories[i]]);
            CHECK(col == pred_hist[categories[i]]);
        }
    }
}

TEST_CASE("chi_squared_independence matches the hand-computed fixtures") {
    ConfusionMatrix m;
    m.categories = {"A", "B"};
    m.counts = {{10, 20}, {20, 10}};
    const ChiSquaredResult r = chi_squared_independence(m);
    CHECK(r.statistic == doctest::Approx(20.0 / 3.0).epsilon(1e-4));
    CHECK(r.degrees_of_freedom == 1);
    CHECK(r.p_value == doctest::Approx(0.00982).epsilon(1e-2));

    m.counts = {{5, 0}, {0, 5}};
    const ChiSquaredResult diag = chi_squared_independence(m);
    CHECK(diag.statistic == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(diag.degrees_of_freedom == 1);

    m.counts = {{3, 3}, {3, 3}};
    const ChiSquaredResult flat = chi_squared_independence(m);
    CHECK(flat.statistic == 0.0);
    CHECK(flat.p_value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("chi_squared_independence drops empty rows and rejects df = 0") {
    ConfusionMatrix m;
    m.categories = {"A", "B", "C"};
    m.counts = {{10, 20, 0}, {20, 10, 0}, {0, 0, 0}};
    const ChiSquaredResult r = chi_squared_independence(m);
    CHECK(r.degrees_of_freedom == 1);
    CHECK(r.statistic == doctest::Approx(20.0 / 3.0).epsilon(1e-4));

    m.counts = {{3, 4, 5}, {0, 0, 0}, {0, 0, 0}};
    CHECK_THROWS_AS(chi_squared_independence(m), DomainError);
}

TEST_CASE("chi_squared statistic is invariant under row and column permutations") {
    ConfusionMatrix m;
    m.categories = {"A", "B", "C"};
    m.counts = {{5, 1, 3}, {2, 8, 1}, {4, 2, 9}};
    const double base = chi_squared_independence(m).statistic;

    ConfusionMatrix swapped = m;
    std::swap(swapped.counts[0], swapped.counts[2]);  // row swap
    CHECK(chi_squared_independence(swapped).statistic == doctest::Approx(base).epsilon(1e-12));

    ConfusionMatrix col_swapped = m;
    for (auto& row : col_swapped.counts) std::swap(row[0], row[1]);
    CHECK(chi_squared_independence(col_swapped).statistic ==
          doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("pairwise_kappa_table shapes match the coder count") {
    std::vector<LabelledInstance> instances;
    const std::string labels_a[6] = {"x", "x", "y", "y", "x", "y"};
    const std::string labels_b[6] = {"x", "y", "y", "y", "x", "x"};
    for (int i = 0; i < 6; ++i) {
        instances.push_back({"i" + std::to_string(i),
                             {{"c1", labels_a[i]}, {"c2", labels_b[i]}}});
    }
    const auto consensus_labels = std::map<std::string, std::string>{
        {"i0", "x"}, {"i1", "x"}, {"i2", "y"}, {"i3", "y"}, {"i4", "x"}, {"i5", "y"}};
    const KappaTable table = pairwise_kappa_table(instances, consensus_labels);
    CHECK(table.coders.size() == 2);
    CHECK(table.pairwise.size() == 1);  // C(2,2) = 1
    CHECK(table.vs_consensus.size() == 2);
}

TEST_CASE("pairwise_kappa_table with five coders has C(5,2) cells") {
    std::mt19937 rng(23);
    const std::string labels[3] = {"x", "y", "z"};
    std::vector<LabelledInstance> instances;
    for (int i = 0; i < 20; ++i) {
        LabelledInstance instance;
        instance.instance_id = "i" + std::to_string(i);
        for (int c = 0; c < 5; ++c)
            instance.labels_by_coder["c" + std::to_string(c)] = labels[rng() % 3];
        instances.push_back(instance);
    }
    ConsensusPolicy policy;
    policy.arbitration = [](const LabelledInstance&, const std::vector<std::string>& tied) {
        return tied.front();
    };
    const auto consensus_labels = consensus(instances, policy);
    const KappaTable table = pairwise_kappa_table(instances, consensus_labels);
    CHECK(table.coders.size() == 5);
    CHECK(table.pairwise.size() == 10);
    CHECK(table.vs_consensus.size() == 5);
}

TEST_CASE("pairwise_kappa_table rejects coders with disjoint coverage") {
    std::vector<LabelledInstance> instances = {{"i1", {{"c1", "x"}}}, {"i2", {{"c2", "y"}}}};
    try {
        pairwise_kappa_table(instances, {{"i1", "x"}, {"i2", "y"}});
        FAIL("expected DomainError");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("no overlapping instances") != std::string::npos);
    }
}

TEST_CASE("pairwise_kappa_table excludes missing labels pairwise, not listwise") {
    // c1/c2 overlap on 4 instances; c3 labels only 2 of them.
    std::vector<LabelledInstance> instances = {
        {"i1", {{"c1", "x"}, {"c2", "x"}, {"c3", "y"}}},
        {"i2", {{"c1", "y"}, {"c2", "x"}}},
        {"i3", {{"c1", "x"}, {"c2", "y"}, {"c3", "x"}}},
        {"i4", {{"c1", "y"}, {"c2", "y"}}},
    };
    const std::map<std::string, std::string> consensus_labels = {
        {"i1", "x"}, {"i2", "y"}, {"i3", "x"}, {"i4", "y"}};
    const KappaTable table = pairwise_kappa_table(instances, consensus_labels);
    CHECK(table.pairwise.at({"c1", "c2"}).n == 4);
    CHECK(table.pairwise.at({"c1", "c3"}).n == 2);
    CHECK(table.vs_consensus.at("c3").n == 2);
}

TEST_CASE("expert label CSV loads into per-instance maps") {
    test_util::TempDir tmp("labels");
    const auto path = tmp.path() / "labels.csv";
    test_util::spit(path,
                    "instance_id,coder_id,label\n"
                    "i1,Expert 1,KC\n"
                    "i1,Expert 2,LMC\n"
                    "i2,Expert 1,FC\n");
    const auto instances = load_labelled_instances(path);
    REQUIRE(instances.size() == 2);
    CHECK(instances[0].instance_id == "i1");
    CHECK(instances[0].labels_by_coder.at("Expert 2") == "LMC");
    CHECK(instances[1].labels_by_coder.size() == 1);

    test_util::spit(tmp.path() / "bad.csv", "foo,bar\n");
    CHECK_THROWS_AS(load_labelled_instances(tmp.path() / "bad.csv"), ParseError);
}
