// biasamp: audit how far generated-image gender ratios drift from the
// training captions that back them, per occupation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "biasamp/config.hpp"
#include "biasamp/corpus.hpp"
#include "biasamp/embednn.hpp"
#include "biasamp/errors.hpp"
#include "biasamp/indicator.hpp"
#include "biasamp/labeling.hpp"
#include "biasamp/pipeline.hpp"
#include "biasamp/rng.hpp"
#include "biasamp/synthetic.hpp"

namespace {

using namespace biasamp;
using ordered_json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

std::vector<SelectionMethod> parse_methods(const std::string& csv) {
    std::vector<SelectionMethod> methods;
    std::string item;
    std::stringstream ss(csv);
    while (std::getline(ss, item, ',')) {
        while (!item.empty() && item.front() == ' ') item.erase(item.begin());
        while (!item.empty() && item.back() == ' ') item.pop_back();
        if (item.empty()) continue;
        if (item == "all") return all_methods();
        auto m = method_from_name(item);
        if (!m) throw CLI::ValidationError("--methods", "unknown method '" + item + "'");
        methods.push_back(*m);
    }
    if (methods.empty()) throw CLI::ValidationError("--methods", "no methods given");
    return methods;
}

AuditConfig load_config_with_overrides(const std::string& config_path,
                                       const std::optional<std::uint64_t>& seed) {
    AuditConfig config = load_config(config_path);
    if (seed) config.seed = *seed;
    return config;
}

int cmd_ingest(const std::string& corpus_path, const std::string& format, double min_prob) {
    Corpus corpus;
    if (format == "auto")
        corpus = Corpus::load(corpus_path);
    else
        corpus = Corpus::load(corpus_path,
                              format == "csv" ? CorpusFormat::Csv : CorpusFormat::Jsonl);
    FilterCounts counts;
    std::vector<ImageMeta> metas;
    metas.reserve(corpus.size());
    for (const auto& rec : corpus.records()) metas.push_back(to_image_meta(rec));
    filter_and_label(metas, min_prob, &counts);
    std::cout << "records: " << corpus.size() << "\n";
    std::cout << "usable at min_prob " << min_prob << ": " << counts.kept << "\n";
    std::cout << "dropped (face_count != 1): " << counts.dropped_face_count << "\n";
    std::cout << "dropped (no classifier output): " << counts.dropped_missing_prob << "\n";
    std::cout << "dropped (low confidence): " << counts.dropped_low_confidence << "\n";
    return kExitOk;
}

int cmd_query(const AuditConfig& config, const std::vector<std::string>& occupations,
              bool print_ids) {
    Corpus corpus = config.corpus_format
                        ? Corpus::load(config.corpus_path, *config.corpus_format)
                        : Corpus::load(config.corpus_path);
    OccupationLexicon lexicon = config.occupations;
    if (!occupations.empty()) lexicon = OccupationLexicon::from_phrases(occupations);
    const auto results = query_all(corpus, lexicon);
    for (const auto& [occupation, ids] : results) {
        if (print_ids) {
            for (const auto& id : ids) std::cout << occupation << '\t' << id << '\n';
        } else {
            std::cout << occupation << '\t' << ids.size() << '\n';
        }
    }
    return kExitOk;
}

int cmd_indicators(const AuditConfig& config, const std::string& out_path) {
    Corpus corpus = config.corpus_format
                        ? Corpus::load(config.corpus_path, *config.corpus_format)
                        : Corpus::load(config.corpus_path);
    const auto lexicon = IndicatorLexicon::defaults(!config.strict_lexicon);
    const auto names = NameGenderTable::load(config.name_table_path);
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path, std::ios::binary);
        if (!file) throw DataError("cannot write " + out_path);
        out = &file;
    }
    for (const auto& rec : corpus.records()) {
        const auto verdict = detect_indicators(rec.text, lexicon, names);
        ordered_json j;
        j["id"] = rec.id;
        j["verdict"] = std::string(verdict_name(verdict.value));
        ordered_json evidence = ordered_json::array();
        for (const auto& ev : verdict.evidence) {
            ordered_json e;
            e["token"] = ev.token;
            e["source"] = std::string(indicator_source_name(ev.source));
            e["gender"] = std::string(label_name(ev.gender));
            evidence.push_back(std::move(e));
        }
        j["evidence"] = std::move(evidence);
        *out << j.dump() << '\n';
    }
    return kExitOk;
}

int cmd_select(const AuditConfig& config, const std::string& method_name_str,
               const std::string& out_path) {
    const auto method = method_from_name(method_name_str);
    if (!method) throw CLI::ValidationError("--method", "unknown method");
    AuditContext ctx(config);
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path, std::ios::binary);
        if (!file) throw DataError("cannot write " + out_path);
        out = &file;
    }

    const bool use_nn =
        *method == SelectionMethod::NN || *method == SelectionMethod::NNNoIndicator;
    const bool no_indicator = *method == SelectionMethod::NoIndicator ||
                              *method == SelectionMethod::NNNoIndicator;
    for (const auto& occupation : config.occupations.phrases()) {
        std::vector<std::string> pool;
        for (const auto& img : ctx.labeled_training(occupation))
            if (!no_indicator || ctx.verdict(img.id) == IndicatorVerdictKind::None)
                pool.push_back(img.id);
        auto emit = [&](const std::optional<int>& prompt_id,
                        const std::vector<std::string>& ids, bool short_sample) {
            ordered_json j;
            j["occupation"] = occupation;
            j["prompt_id"] = prompt_id ? ordered_json(*prompt_id) : ordered_json(nullptr);
            j["method"] = std::string(method_name(*method));
            j["ids"] = ids;
            j["short_sample"] = short_sample;
            *out << j.dump() << '\n';
        };
        if (!use_nn) {
            const char* purpose = no_indicator ? "select:no_indicator" : "select:naive";
            auto subset = sample_subset(pool, config.sample_n,
                                        derive_seed(config.seed, occupation, purpose));
            emit(std::nullopt, subset.ids, subset.short_sample);
        } else {
            const auto* captions = ctx.caption_embeddings();
            const auto* prompts = ctx.prompt_embeddings();
            for (const auto& tmpl : config.prompts.templates()) {
                std::vector<std::string> ids;
                const std::string pid = prompt_embedding_id(tmpl.id, occupation);
                if (captions && prompts && prompts->contains(pid)) {
                    std::vector<std::string> candidates;
                    for (const auto& id : pool)
                        if (captions->contains(id)) candidates.push_back(id);
                    for (const auto& nb :
                         top_k_neighbors(*captions, prompts->vec(pid), candidates,
                                         static_cast<std::size_t>(config.k)))
                        ids.push_back(nb.id);
                }
                emit(tmpl.id, ids, ids.size() < static_cast<std::size_t>(config.k));
            }
        }
    }
    return kExitOk;
}

int cmd_measure(const AuditConfig& config, const std::vector<SelectionMethod>& methods,
                const std::string& out_dir) {
    AuditContext ctx(config);
    std::vector<std::string> warnings = ctx.load_warnings;
    auto rows = measure(ctx, methods, &warnings);
    std::filesystem::create_directories(out_dir);
    write_measurements(rows, std::filesystem::path(out_dir) / "measurements.jsonl");
    {
        std::ofstream snap(std::filesystem::path(out_dir) / "config.snapshot.cfg",
                           std::ios::binary);
        snap << config.canonical();
    }
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "wrote " << rows.size() << " measurement rows to " << out_dir << "\n";
    return kExitOk;
}

int cmd_report(const std::string& measurements_path, double significance,
               const std::string& out_dir) {
    const auto rows = read_measurements(measurements_path);
    write_report_files(rows, significance, out_dir);
    std::cout << "wrote report files to " << out_dir << "\n";
    return kExitOk;
}

int cmd_stats(const AuditConfig& config, const std::string& out_dir) {
    AuditContext ctx(config);
    const auto stats = compute_indicator_stats(ctx);
    std::optional<PearsonResult> correlation;
    if (stats.size() >= 3) {
        std::vector<double> xs, ys;
        for (const auto& s : stats) {
            xs.push_back(s.pct_female_images());
            ys.push_back(s.pct_female_indicated());
        }
        try {
            correlation = pearson(xs, ys);
        } catch (const DataError&) {
        }
    }
    write_indicator_stats(stats, correlation, config.significance, out_dir);
    std::cout << "wrote indicator statistics for " << stats.size() << " occupations to "
              << out_dir << "\n";
    return kExitOk;
}

int cmd_run(const AuditConfig& config, const std::vector<SelectionMethod>& methods,
            const std::string& out_dir) {
    PipelineOptions options;
    options.methods = methods;
    options.out_dir = out_dir;
    const PipelineSummary summary = run_pipeline(config, options);
    for (const auto& w : summary.warnings) std::cerr << "warning: " << w << "\n";
    for (SelectionMethod method : all_methods()) {
        auto it = summary.methods.find(method);
        if (it == summary.methods.end()) continue;
        std::cout << method_display_name(method) << ": average amplification ";
        if (it->second.average)
            std::cout << *it->second.average;
        else
            std::cout << "n/a";
        std::cout << "\n";
    }
    if (summary.cap) {
        std::cout << "Captions as Prompts: average amplification ";
        if (summary.cap->average_all)
            std::cout << *summary.cap->average_all;
        else
            std::cout << "n/a";
        std::cout << "\n";
    }
    std::cout << "report files in " << out_dir << "\n";
    return kExitOk;
}

int cmd_synth(const std::string& preset, std::uint64_t seed, double gamma, int captions,
              int generations, const std::string& out_dir) {
    SyntheticSpec spec;
    if (preset == "paradox") {
        spec = paradox_spec(seed, captions, generations);
        spec.gamma = gamma;
    } else if (preset == "suite") {
        spec = skew_suite_spec(seed, gamma, captions, generations);
    } else if (preset == "gamma-probe") {
        spec = gamma_probe_spec(seed, gamma, captions, generations);
    } else {
        throw CLI::ValidationError("--preset", "unknown preset '" + preset + "'");
    }
    const SyntheticBundle bundle = gen_bundle(spec);
    write_bundle(bundle, out_dir);
    std::cout << "wrote synthetic bundle (" << bundle.corpus.size() << " captions, "
              << bundle.generations.size() << " generations) to " << out_dir << "\n";
    std::cout << "run it with: biasamp run --config " << out_dir << "/audit.cfg --out-dir <dir>\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bias amplification audit toolkit"};
    app.require_subcommand(1);

    std::string config_path, corpus_path, out_dir, out_path, measurements_path;
    std::string format = "auto", methods_csv = "all", method_str = "naive";
    std::string preset = "paradox";
    double min_prob = 0.9, significance = 0.05, gamma = 0.0;
    std::optional<std::uint64_t> seed_override;
    std::uint64_t synth_seed = 42;
    int captions = 20000, generations = 500;
    std::vector<std::string> occupations;
    bool print_ids = false;

    auto add_config = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "audit config file")->required();
        cmd->add_option("--seed", seed_override, "override the config seed");
    };

    auto* ingest = app.add_subcommand("ingest", "validate a caption corpus and print counts");
    ingest->add_option("--corpus", corpus_path, "corpus file")->required();
    ingest->add_option("--format", format, "jsonl, csv, or auto")
        ->check(CLI::IsMember({"jsonl", "csv", "auto"}));
    ingest->add_option("--min-prob", min_prob, "classifier probability threshold");

    auto* query = app.add_subcommand("query", "occupation keyword query over the corpus");
    add_config(query);
    query->add_option("--occupation", occupations, "occupation phrase (repeatable)");
    query->add_flag("--ids", print_ids, "print matching caption ids instead of counts");

    auto* indicators = app.add_subcommand("indicators", "per-caption gender-indicator verdicts");
    add_config(indicators);
    indicators->add_option("--out", out_path, "output JSONL (default: stdout)");

    auto* select = app.add_subcommand("select", "emit training subsets for one method");
    add_config(select);
    select->add_option("--method", method_str, "selection method")->required();
    select->add_option("--out", out_path, "output JSONL (default: stdout)");

    auto* measure_cmd = app.add_subcommand("measure", "measure T/G/A for the chosen methods");
    add_config(measure_cmd);
    measure_cmd->add_option("--methods", methods_csv, "comma list or 'all'");
    measure_cmd->add_option("--out-dir", out_dir, "output directory")->required();

    auto* report = app.add_subcommand("report", "aggregate measurements into report files");
    report->add_option("--measurements", measurements_path, "measurements.jsonl")->required();
    report->add_option("--significance", significance, "test significance level");
    report->add_option("--out-dir", out_dir, "output directory")->required();

    auto* stats = app.add_subcommand("stats", "indicator statistics and correlation");
    add_config(stats);
    stats->add_option("--out-dir", out_dir, "output directory")->required();

    auto* run = app.add_subcommand("run", "full audit: measure + report + stats");
    add_config(run);
    run->add_option("--methods", methods_csv, "comma list or 'all'");
    run->add_option("--out-dir", out_dir, "output directory")->required();

    auto* synth = app.add_subcommand("synth", "write a synthetic bundle with known ground truth");
    synth->add_option("--preset", preset, "paradox, suite, or gamma-probe");
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--gamma", gamma, "log-odds true-amplification knob");
    synth->add_option("--captions", captions, "captions per occupation");
    synth->add_option("--generations-per-prompt", generations, "generations per prompt");
    synth->add_option("--out-dir", out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (ingest->parsed()) return cmd_ingest(corpus_path, format, min_prob);
        if (query->parsed())
            return cmd_query(load_config_with_overrides(config_path, seed_override), occupations,
                             print_ids);
        if (indicators->parsed())
            return cmd_indicators(load_config_with_overrides(config_path, seed_override),
                                  out_path);
        if (select->parsed())
            return cmd_select(load_config_with_overrides(config_path, seed_override), method_str,
                              out_path);
        if (measure_cmd->parsed())
            return cmd_measure(load_config_with_overrides(config_path, seed_override),
                               parse_methods(methods_csv), out_dir);
        if (report->parsed()) return cmd_report(measurements_path, significance, out_dir);
        if (stats->parsed())
            return cmd_stats(load_config_with_overrides(config_path, seed_override), out_dir);
        if (run->parsed())
            return cmd_run(load_config_with_overrides(config_path, seed_override),
                           parse_methods(methods_csv), out_dir);
        if (synth->parsed())
            return cmd_synth(preset, synth_seed, gamma, captions, generations, out_dir);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
