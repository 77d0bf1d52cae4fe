#include <doctest.h>

#include <bit>
#include <cmath>
#include <random>

#include "rarft/metrics.hpp"
#include "rarft/reward_engine.hpp"
#include "support/test_util.hpp"

using namespace rarft;
using testutil::irrelevant_sample;
using testutil::relevant_sample;

TEST_CASE("make_prediction prefers the strict parse and falls back per section") {
    const auto strict = make_prediction("a", "<think>t</think><answer>4 to 8</answer><correct></correct>");
    CHECK(strict.predicted_relevant);
    CHECK(strict.parsed->segment == Segment{4.0, 8.0});

    const auto lenient = make_prediction("b", "preamble <answer>4 to 8</answer>");
    CHECK(lenient.predicted_relevant);
    CHECK(lenient.parsed->think.empty());

    const auto nothing = make_prediction("c", "no template at all, 4 to 8");
    CHECK(!nothing.parsed.has_value());
    CHECK(!nothing.predicted_relevant);

    const auto refusal = make_prediction("d", "<think>t</think><answer>not relevant</answer><correct></correct>");
    CHECK(!refusal.predicted_relevant);
    CHECK(refusal.parsed.has_value());
}

TEST_CASE("ra_iou covers the three branches") {
    const auto rel = relevant_sample("r", 4.0, 8.0);
    const auto irr = irrelevant_sample("i", "refusal");

    const auto grounded = make_prediction("p", "<think>.</think><answer>2 to 6</answer><correct></correct>");
    const auto refused = make_prediction("p", "<think>.</think><answer>nothing matches</answer><correct></correct>");

    CHECK(ra_iou(rel, grounded) == doctest::Approx(1.0 / 3.0));
    CHECK(ra_iou(rel, refused) == 0.0);
    CHECK(ra_iou(irr, refused) == 1.0);
    CHECK(ra_iou(irr, grounded) == 0.0);
}

TEST_CASE("recall_at uses a strict greater-than") {
    const std::vector<double> scores = {1.0, 1.0, 0.0, 0.4};
    CHECK(recall_at(scores, 0.5) == doctest::Approx(0.5));
    CHECK(recall_at(scores, 0.4) == doctest::Approx(0.5));  // 0.4 > 0.4 is false
    CHECK(recall_at(std::vector<double>{1, 1, 1}, 0.99) == 1.0);
    CHECK(recall_at(std::vector<double>{0, 0}, 0.3) == 0.0);
    CHECK(recall_at(std::vector<double>(4, 1.0), 1.0) == 0.0);  // scores equal to m never count
    CHECK_THROWS_AS(recall_at(std::vector<double>{}, 0.5), EmptyInput);
    CHECK_THROWS_AS(recall_at(scores, 0.0), InvariantError);
    CHECK_THROWS_AS(recall_at(scores, 1.5), InvariantError);
}

TEST_CASE("recall_at is non-increasing in the threshold") {
    std::mt19937_64 rng(64);
    std::uniform_real_distribution<double> value(0.0, 1.0);
    std::vector<double> scores(50);
    for (double& s : scores) s = value(rng);
    double previous = 1.0;
    for (double m : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const double r = recall_at(scores, m);
        CHECK(r <= previous);
        previous = r;
    }
}

TEST_CASE("degenerate always-grounding classifier reproduces the 66.7/0.0/33.3 pattern") {
    std::vector<std::pair<Relevance, bool>> pairs;
    for (int i = 0; i < 50; ++i) pairs.emplace_back(Relevance::Relevant, true);
    for (int i = 0; i < 50; ++i) pairs.emplace_back(Relevance::Irrelevant, true);

    const auto f1 = f1_scores(pairs);
    CHECK(std::abs(f1.relevant - 0.667) < 5e-4);
    CHECK(std::abs(f1.irrelevant - 0.0) < 5e-4);
    CHECK(std::abs(f1.average - 0.333) < 5e-4);
}

TEST_CASE("perfect classifier scores ones") {
    std::vector<std::pair<Relevance, bool>> pairs = {{Relevance::Relevant, true},
                                                     {Relevance::Irrelevant, false},
                                                     {Relevance::Relevant, true},
                                                     {Relevance::Irrelevant, false}};
    const auto f1 = f1_scores(pairs);
    CHECK(f1.relevant == 1.0);
    CHECK(f1.irrelevant == 1.0);
    CHECK(f1.average == 1.0);
}

TEST_CASE("one misclassified irrelevant in a 2+2 set") {
    std::vector<std::pair<Relevance, bool>> pairs = {{Relevance::Relevant, true},
                                                     {Relevance::Relevant, true},
                                                     {Relevance::Irrelevant, true},
                                                     {Relevance::Irrelevant, false}};
    const auto f1 = f1_scores(pairs);
    // relevant: precision 2/3, recall 1 -> 0.8; irrelevant: precision 1, recall 1/2 -> 2/3
    CHECK(f1.relevant == doctest::Approx(0.8));
    CHECK(f1.irrelevant == doctest::Approx(2.0 / 3.0));
    CHECK(f1.average == doctest::Approx((0.8 + 2.0 / 3.0) / 2.0));
    CHECK_THROWS_AS(f1_scores({}), EmptyInput);
}

TEST_CASE("relabeling invariance swaps the class scores") {
    std::mt19937_64 rng(2121);
    for (int iter = 0; iter < 200; ++iter) {
        std::vector<std::pair<Relevance, bool>> pairs;
        const size_t n = 2 + rng() % 30;
        for (size_t i = 0; i < n; ++i) {
            pairs.emplace_back(rng() % 2 ? Relevance::Relevant : Relevance::Irrelevant,
                               rng() % 2 == 0);
        }
        std::vector<std::pair<Relevance, bool>> flipped;
        for (const auto& [gt, pred] : pairs) {
            flipped.emplace_back(
                gt == Relevance::Relevant ? Relevance::Irrelevant : Relevance::Relevant, !pred);
        }
        const auto a = f1_scores(pairs);
        const auto b = f1_scores(flipped);
        CHECK(a.relevant == doctest::Approx(b.irrelevant));
        CHECK(a.irrelevant == doctest::Approx(b.relevant));
        CHECK(a.average == doctest::Approx(b.average));
    }
}

TEST_CASE("rt_iou basics") {
    const auto obj = parse_category_path("Object/ObjectExistence");
    const auto cnt = parse_category_path("Attribute/Counting");
    const auto scn = parse_category_path("Scene/SceneExistence");

    CHECK(rt_iou({obj}, {obj}) == 1.0);
    CHECK(rt_iou({obj, cnt}, {obj}) == doctest::Approx(0.5));
    CHECK(rt_iou({scn}, {obj, cnt}) == 0.0);
    CHECK(rt_iou({}, {obj}) == 0.0);
    CHECK_THROWS_AS(rt_iou({obj}, {}), EmptyInput);
}

TEST_CASE("rt_iou equals the brute-force subset oracle exhaustively") {
    const auto& cats = all_categories();
    auto to_set = [&](unsigned mask) {
        std::set<RelevanceCategory> s;
        for (int bit = 0; bit < 11; ++bit) {
            if (mask & (1u << bit)) s.insert(cats[static_cast<size_t>(bit)]);
        }
        return s;
    };

    for (unsigned gt = 1; gt < (1u << 11); ++gt) {
        if (std::popcount(gt) > 3) continue;  // ground truth carries 1..3 categories
        const auto gt_set = to_set(gt);
        for (unsigned pred = 0; pred < (1u << 11); ++pred) {
            const unsigned inter = std::popcount(pred & gt);
            const unsigned uni = std::popcount(pred | gt);
            const double expected =
                pred == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
            if (rt_iou(to_set(pred), gt_set) != expected) {
                REQUIRE(rt_iou(to_set(pred), gt_set) == expected);  // report only failures
            }
        }
    }
    CHECK(true);
}

TEST_CASE("extract_pred_categories parses, validates and warns") {
    ScriptedLlmClient llm;
    llm.push_response(R"(["Object/ObjectExistence","Attribute/Counting"])");
    auto cats = extract_pred_categories("mentions objects and counts", llm);
    CHECK(cats.size() == 2);

    llm.push_response("[]");
    CHECK(extract_pred_categories("nothing", llm).empty());

    llm.push_response(R"(["Bogus/Path"])");
    CHECK(extract_pred_categories("bogus", llm).empty());  // dropped with a warning

    llm.push_response("not json");
    llm.push_response("still not json");
    CHECK_THROWS_AS(extract_pred_categories("x", llm), LlmSchemaError);
    CHECK(llm.call_count() == 5);  // one re-ask for the final case
}

TEST_CASE("sbert_score clamps cosine into the unit interval") {
    HashingEmbedder embedder;
    CHECK(sbert_score("identical answer", "identical answer", embedder) == doctest::Approx(1.0));

    // force a negative raw cosine with a two-text fixture
    class NegativeEmbedder : public EmbeddingProvider {
    public:
        std::vector<double> embed(const std::string& text) override {
            return text == "a" ? std::vector<double>{1.0, 0.0} : std::vector<double>{-1.0, 0.1};
        }
        std::string provider_id() const override { return "neg"; }
    } negative;
    CHECK(sbert_score("a", "b", negative) == 0.0);
}

TEST_CASE("llm_score parses the grader's dict literal") {
    ScriptedLlmClient llm;
    llm.push_response("{'score': 4.0}");
    CHECK(llm_score("gen", "ref", llm) == doctest::Approx(4.0));

    llm.push_response("{\"score\": 2.5}");  // double quotes also accepted
    CHECK(llm_score("gen", "ref", llm) == doctest::Approx(2.5));

    llm.push_response("{'score': 6}");
    CHECK_THROWS_AS(llm_score("gen", "ref", llm), OutOfRange);

    llm.push_response("I think this deserves a 4");
    llm.push_response("Again prose");
    CHECK_THROWS_AS(llm_score("gen", "ref", llm), LlmSchemaError);
}

namespace {

struct Fixture {
    std::vector<GroundingSample> dataset;
    std::vector<PredictionRecord> predictions;
};

Fixture crafted_suite() {
    Fixture f;
    auto add = [&](GroundingSample sample, const std::string& raw) {
        f.predictions.push_back(make_prediction(sample.sample_id, raw));
        f.dataset.push_back(std::move(sample));
    };

    add(relevant_sample("r1", 4.0, 8.0),
        "<think>.</think><answer>2 to 6</answer><correct></correct>");
    add(relevant_sample("r2", 4.0, 8.0),
        "<think>.</think><answer>4 to 8</answer><correct></correct>");
    add(relevant_sample("r3", 4.0, 8.0),
        "<think>.</think><answer>cannot find it</answer><correct></correct>");
    add(relevant_sample("r4", 0.0, 10.0), "<answer>0 to 5</answer>");  // lenient fallback

    auto i1 = irrelevant_sample("i1", "the mismatch is Action/ActionSequence here");
    add(i1, "<think>.</think><answer>the mismatch is Action/ActionSequence here</answer>"
            "<correct>orig</correct>");
    add(irrelevant_sample("i2", "refusal two"),
        "<think>.</think><answer>between 3 and 9: 3 to 9</answer><correct></correct>");
    add(irrelevant_sample("i3", "refusal three", "q", DifficultyTier::Weak),
        "<think>.</think><answer>no match in the video</answer><correct></correct>");
    add(irrelevant_sample("i4", "refusal four", "q", DifficultyTier::Moderate), "garbage output");
    return f;
}

}  // namespace

TEST_CASE("aggregate_report composes the per-op oracles") {
    const auto f = crafted_suite();
    const auto report = aggregate_report(f.dataset, f.predictions, nullptr, nullptr, {});

    const std::vector<double> expected_scores = {1.0 / 3.0, 1.0, 0.0, 0.5, 1.0, 0.0, 1.0, 1.0};
    double expected_miou = 0.0;
    for (double s : expected_scores) expected_miou += s;
    expected_miou /= 8.0;

    CHECK(report.overall.n_samples == 8);
    CHECK(report.overall.ra_miou == doctest::Approx(expected_miou));
    CHECK(report.overall.recall_at[0].second == doctest::Approx(recall_at(expected_scores, 0.3)));
    CHECK(report.overall.recall_at[1].second == doctest::Approx(recall_at(expected_scores, 0.5)));
    CHECK(report.overall.recall_at[2].second == doctest::Approx(recall_at(expected_scores, 0.7)));
    CHECK(report.overall.f1.relevant == doctest::Approx(0.75));
    CHECK(report.overall.f1.irrelevant == doctest::Approx(0.75));
    CHECK(report.overall.f1.average == doctest::Approx(0.75));
    CHECK(!report.overall.explanation.has_value());  // judge off

    // strong tier block: 4 relevant + i1 + i2
    REQUIRE(report.per_tier.count(DifficultyTier::Strong) == 1);
    const auto& strong = report.per_tier.at(DifficultyTier::Strong);
    CHECK(strong.n_samples == 6);
    const std::vector<double> strong_scores = {1.0 / 3.0, 1.0, 0.0, 0.5, 1.0, 0.0};
    double strong_miou = 0.0;
    for (double s : strong_scores) strong_miou += s;
    CHECK(strong.ra_miou == doctest::Approx(strong_miou / 6.0));
    CHECK(report.per_tier.count(DifficultyTier::Moderate) == 1);
    CHECK(report.per_tier.count(DifficultyTier::Weak) == 1);
}

TEST_CASE("judge-backed explanation metrics match per-op recomputation") {
    const auto f = crafted_suite();
    HashingEmbedder embedder;
    MockLlmClient llm;

    EvalOptions options;
    options.judge_enabled = true;
    const auto report = aggregate_report(f.dataset, f.predictions, &embedder, &llm, options);
    REQUIRE(report.overall.explanation.has_value());

    double rt_sum = 0.0, sbert_sum = 0.0, llm_sum = 0.0;
    size_t n = 0;
    for (size_t i = 0; i < f.dataset.size(); ++i) {
        const auto& sample = f.dataset[i];
        if (sample.relevant()) continue;
        ++n;
        const auto& pred = f.predictions[i];
        if (!pred.parsed || pred.parsed->answer.empty()) continue;
        const std::set<RelevanceCategory> gt(sample.gt_categories.begin(),
                                             sample.gt_categories.end());
        rt_sum += rt_iou(extract_pred_categories(pred.parsed->answer, llm), gt);
        sbert_sum += sbert_score(pred.parsed->answer, *sample.gt_refusal, embedder);
        llm_sum += llm_score(pred.parsed->answer, *sample.gt_refusal, llm);
    }
    CHECK(report.overall.explanation->rt_iou_mean == doctest::Approx(rt_sum / n));
    CHECK(report.overall.explanation->sbert_mean == doctest::Approx(sbert_sum / n));
    CHECK(report.overall.explanation->llm_score_mean == doctest::Approx(llm_sum / n));

    // i1's refusal names its own gt category, so the judge recovers it
    CHECK(report.overall.explanation->rt_iou_mean > 0.0);
}

TEST_CASE("coverage violations are reported by id") {
    auto f = crafted_suite();
    auto missing = f.predictions;
    missing.pop_back();
    CHECK_THROWS_AS(aggregate_report(f.dataset, missing, nullptr, nullptr, {}),
                    MissingPrediction);

    auto duplicated = f.predictions;
    duplicated.push_back(duplicated.front());
    CHECK_THROWS_AS(aggregate_report(f.dataset, duplicated, nullptr, nullptr, {}),
                    DuplicatePrediction);
}

TEST_CASE("tierless datasets omit the per-tier section") {
    std::vector<GroundingSample> dataset = {relevant_sample("a", 1.0, 2.0),
                                            relevant_sample("b", 1.0, 2.0)};
    std::vector<PredictionRecord> predictions = {
        make_prediction("a", "<think>.</think><answer>1 to 2</answer><correct></correct>"),
        make_prediction("b", "<think>.</think><answer>1 to 2</answer><correct></correct>")};
    const auto report = aggregate_report(dataset, predictions, nullptr, nullptr, {});
    CHECK(report.per_tier.empty());

    const auto doc = report_to_json(report);
    CHECK(!doc.contains("per_tier"));
    CHECK(doc.contains("ra_miou"));
}

TEST_CASE("csv export mirrors the table column order") {
    const auto f = crafted_suite();
    const auto report = aggregate_report(f.dataset, f.predictions, nullptr, nullptr, {});
    const std::string csv = report_to_csv(report);
    CHECK(csv.find("r_at_0.3,r_at_0.5,r_at_0.7,miou,f1_relevant,f1_irrelevant,f1_average\n") == 0);
    CHECK(csv.find("0.7500,0.7500,0.7500") != std::string::npos);  // the three f1 columns
}
