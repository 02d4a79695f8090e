// Command-line front end: evaluation, training, generators and the server.
#include "kgrx/cohort.hpp"
#include "kgrx/errors.hpp"
#include "kgrx/harness.hpp"
#include "kgrx/json_io.hpp"
#include "kgrx/kg_synth.hpp"
#include "kgrx/service.hpp"
#include "kgrx/tagger.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace kgrx;

namespace {

std::vector<double> parse_weights(const std::string& s) {
    std::vector<double> out;
    std::stringstream in(s);
    for (std::string part; std::getline(in, part, ',');) {
        try {
            out.push_back(std::stod(part));
        } catch (const std::exception&) {
            throw ConfigError("--weights: not a number: " + part);
        }
    }
    if (out.size() != 3) throw ConfigError("--weights needs three comma-separated values");
    return out;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    return out;
}

SafetyClassifier classifier_for(const std::string& path, const KnowledgeGraph& graph) {
    return path.empty() ? default_classifier(graph) : load_classifier(path);
}

std::vector<ClinicalRecord> records_from(const std::string& path, const KnowledgeGraph& graph,
                                         const CohortConfig& cohort, const std::string& split) {
    if (!path.empty()) return load_records(path);
    const Cohort c = generate_cohort(cohort, graph);
    if (split == "all") return c.records;
    const auto s = parse_split(split);
    if (!s) throw ConfigError("unknown split " + split);
    std::vector<ClinicalRecord> out;
    for (const auto* r : c.select(*s)) out.push_back(*r);
    return out;
}

void add_cohort_options(CLI::App* cmd, CohortConfig& c) {
    cmd->add_option("--cohort-seed", c.seed, "cohort seed")->capture_default_str();
    cmd->add_option("--n-records", c.n_records, "records to generate")->capture_default_str();
    cmd->add_option("--allergy-rate", c.allergy_rate)->capture_default_str();
    cmd->add_option("--comedication-rate", c.comedication_rate)->capture_default_str();
    cmd->add_option("--comorbidity-rate", c.comorbidity_rate)->capture_default_str();
    cmd->add_option("--negation-rate", c.negation_rate)->capture_default_str();
    cmd->add_option("--template-set", c.template_set)->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Knowledge-guided pediatric dental antibiotic recommender"};
    app.require_subcommand(1);

    // evaluate
    std::string kg_path, out_path, classifier_path, records_path, weights = "0.4,0.4,0.2", split = "all";
    std::vector<std::string> variants{"full"};
    CohortConfig cohort;
    cohort.n_records = 1000;
    double tau = 0.8, alpha = 0.5;
    std::size_t topk = 10, guidelines = 3, threads = 1;
    bool fit = false;
    auto* eval = app.add_subcommand("evaluate", "run the metric suite on a synthetic cohort");
    eval->add_option("--kg", kg_path, "knowledge graph file")->required();
    add_cohort_options(eval, cohort);
    eval->add_option("--records", records_path, "evaluate this records file instead of a generated cohort");
    eval->add_option("--split", split, "all|train|dev|test of the generated cohort")->capture_default_str();
    eval->add_option("--variant", variants, "full|no_kg|no_rag|no_safety|all (repeatable)")->capture_default_str();
    eval->add_option("--tau", tau)->capture_default_str();
    eval->add_option("--weights", weights, "w_dose,w_allergy,w_interaction")->capture_default_str();
    eval->add_option("--topk", topk)->capture_default_str();
    eval->add_option("--guidelines", guidelines, "guideline passages retrieved")->capture_default_str();
    eval->add_option("--alpha", alpha, "fusion gate")->capture_default_str();
    eval->add_flag("--fit-gate", fit, "fit alpha on the dev split first");
    eval->add_option("--classifier", classifier_path, "trained classifier (default: train one)");
    eval->add_option("--threads", threads)->capture_default_str();
    eval->add_option("--out", out_path, "write one JSON report per line");

    // serve
    std::string config_path;
    auto* serve = app.add_subcommand("serve", "run the HTTP service");
    serve->add_option("--config", config_path, "JSON config file (KGRX_* variables override it)");

    // train-classifier
    std::size_t n_examples = 2000, epochs = 3000;
    std::uint64_t seed = 7;
    double lr = 0.5;
    auto* tc = app.add_subcommand("train-classifier", "train the unsafe-candidate classifier");
    tc->add_option("--kg", kg_path)->required();
    tc->add_option("--examples", n_examples)->capture_default_str();
    tc->add_option("--seed", seed)->capture_default_str();
    tc->add_option("--epochs", epochs)->capture_default_str();
    tc->add_option("--lr", lr)->capture_default_str();
    tc->add_option("--out", out_path)->required();

    // train-tagger
    std::size_t tagger_epochs = 100;
    double tagger_lr = 0.1;
    std::string curve_path;
    auto* tt = app.add_subcommand("train-tagger", "train the BIO tagger on annotated records");
    tt->add_option("--kg", kg_path)->required();
    tt->add_option("--records", records_path, "annotated records (default: generated train split)");
    add_cohort_options(tt, cohort);
    tt->add_option("--epochs", tagger_epochs)->capture_default_str();
    tt->add_option("--lr", tagger_lr)->capture_default_str();
    tt->add_option("--seed", seed)->capture_default_str();
    tt->add_option("--out", out_path)->required();
    tt->add_option("--curve", curve_path, "write per-epoch mean NLL");

    // gen-kg
    SynthConfig synth;
    auto* gk = app.add_subcommand("gen-kg", "write a synthetic benchmark-scale graph");
    gk->add_option("--seed", synth.seed)->capture_default_str();
    gk->add_option("--scale", synth.scale)->capture_default_str();
    gk->add_option("--out", out_path)->required();

    // gen-cohort
    auto* gc = app.add_subcommand("gen-cohort", "write a synthetic annotated cohort");
    gc->add_option("--kg", kg_path)->required();
    add_cohort_options(gc, cohort);
    gc->add_option("--out", out_path)->required();

    // parse / recommend
    auto* pa = app.add_subcommand("parse", "extract findings for each record");
    pa->add_option("--kg", kg_path)->required();
    pa->add_option("--records", records_path)->required();
    auto* rc = app.add_subcommand("recommend", "recommend for each record");
    rc->add_option("--kg", kg_path)->required();
    rc->add_option("--records", records_path)->required();
    rc->add_option("--classifier", classifier_path);
    rc->add_option("--tau", tau)->capture_default_str();
    rc->add_option("--weights", weights)->capture_default_str();
    rc->add_option("--alpha", alpha)->capture_default_str();
    rc->add_option("--topk", topk)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (eval->parsed()) {
            const auto graph = load_graph(kg_path);
            const Retriever retriever(graph);
            const auto w = parse_weights(weights);
            EvaluationConfig ec;
            ec.recommend.weights = SafetyWeights(w[0], w[1], w[2], tau);
            ec.recommend.gate = FusionGate(alpha);
            ec.recommend.top_k = topk;
            ec.recommend.guidelines_m = guidelines;
            ec.threads = threads;
            if (fit) {
                const Cohort c = generate_cohort(cohort, graph);
                std::vector<DevCase> dev;
                for (const auto* r : c.select(Split::dev)) {
                    dev.push_back({r, {r->gold->evidence_node_ids.begin(), r->gold->evidence_node_ids.end()}});
                }
                ec.recommend.gate = fit_gate(retriever, dev, topk, guidelines);
                std::cerr << "fitted alpha " << ec.recommend.gate.alpha() << "\n";
            }
            const auto records = records_from(records_path, graph, cohort, split);
            const auto classifier = classifier_for(classifier_path, graph);
            if (variants.size() == 1 && variants[0] == "all") {
                variants.clear();
                for (auto v : kAllVariants) variants.emplace_back(to_string(v));
            }
            const auto reports = run_ablation(records, retriever, classifier, variants, ec);
            std::cout << report_table(reports);
            if (!out_path.empty()) {
                auto out = open_out(out_path);
                for (const auto& r : reports) out << report_json(r).dump() << '\n';
            }
        } else if (serve->parsed()) {
            Service service(load_service_config(config_path, kgrx_environment()));
            run_server(service);
        } else if (tc->parsed()) {
            const auto graph = load_graph(kg_path);
            auto examples = generate_classifier_examples(graph, n_examples, seed);
            const std::size_t n_train = examples.size() * 4 / 5;
            const std::span<const LabeledCandidate> all(examples);
            const auto result =
                train_safety_classifier(all.first(n_train), graph, seed, {epochs, lr});
            std::vector<double> scores;
            std::vector<int> labels;
            for (const auto& ex : all.subspan(n_train)) {
                scores.push_back(result.classifier.unsafe_probability(classifier_features(ex.candidate, ex.profile, graph)));
                labels.push_back(ex.unsafe ? 1 : 0);
            }
            save_classifier(result.classifier, out_path);
            std::cout << "loss " << result.epoch_loss.front() << " -> " << result.epoch_loss.back()
                      << ", held-out AUC " << roc_auc(scores, labels) << "\n";
        } else if (tt->parsed()) {
            const auto graph = load_graph(kg_path);
            const auto records = records_from(records_path, graph, cohort, records_path.empty() ? "train" : "all");
            const auto result = train_tagger(records, graph, {tagger_epochs, tagger_lr, seed});
            open_out(out_path) << tagger_to_json(result.tagger).dump() << '\n';
            if (!curve_path.empty()) {
                auto out = open_out(curve_path);
                for (std::size_t i = 0; i < result.epoch_mean_nll.size(); ++i) {
                    out << i << '\t' << result.epoch_mean_nll[i] << '\n';
                }
            }
            std::cout << "mean NLL " << result.epoch_mean_nll.front() << " -> " << result.epoch_mean_nll.back()
                      << "\n";
        } else if (gk->parsed()) {
            const auto graph = synthesize_graph(synth);
            auto out = open_out(out_path);
            write_graph(graph, out);
            std::cout << graph.node_count() << " nodes, " << graph.edge_count() << " edges\n";
        } else if (gc->parsed()) {
            const auto graph = load_graph(kg_path);
            const Cohort c = generate_cohort(cohort, graph);
            auto out = open_out(out_path);
            write_records(c.records, out);
            std::cout << c.records.size() << " records\n";
        } else if (pa->parsed()) {
            const auto graph = load_graph(kg_path);
            for (const auto& r : load_records(records_path)) {
                std::cout << json{{"record_id", r.record_id}, {"findings", extract(r, graph)}}.dump() << '\n';
            }
        } else if (rc->parsed()) {
            const auto graph = load_graph(kg_path);
            const Retriever retriever(graph);
            const auto classifier = classifier_for(classifier_path, graph);
            const auto w = parse_weights(weights);
            RecommendConfig config;
            config.weights = SafetyWeights(w[0], w[1], w[2], tau);
            config.gate = FusionGate(alpha);
            config.top_k = topk;
            const KgTemplateGenerator generator(retriever);
            for (const auto& r : load_records(records_path)) {
                json j = recommend(r, retriever, config, classifier, generator);
                j["record_id"] = r.record_id;
                std::cout << j.dump() << '\n';
            }
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
