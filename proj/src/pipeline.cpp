#include "biasamp/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "biasamp/errors.hpp"
#include "biasamp/rng.hpp"
#include "biasamp/synthetic.hpp"

namespace biasamp {

using ordered_json = nlohmann::ordered_json;

namespace {

void require_file(const std::filesystem::path& path, const char* what) {
    if (!std::filesystem::exists(path))
        throw ParseError(path.string(), 0, std::string("missing ") + what + " file");
}

std::string gen_image_id(const std::string& occupation, const std::string& prompt_id,
                         long long seed) {
    return occupation + "|" + prompt_id + "|" + std::to_string(seed);
}

std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

bool embeddings_ok(const EmbeddingMatrix* captions, const EmbeddingMatrix* prompts) {
    return captions && prompts && captions->size() > 0 && prompts->size() > 0;
}

}  // namespace

AuditContext::AuditContext(const AuditConfig& config) : config_(config) {
    require_file(config.corpus_path, "corpus");
    corpus_ = config.corpus_format ? Corpus::load(config.corpus_path, *config.corpus_format)
                                   : Corpus::load(config.corpus_path);
    indicator_lexicon_ = IndicatorLexicon::defaults(!config.strict_lexicon);
    require_file(config.name_table_path, "name table");
    names_ = NameGenderTable::load(config.name_table_path);

    query_results_ = query_all(corpus_, config.occupations);
    for (const auto& [occupation, ids] : query_results_) {
        std::vector<ImageMeta> metas;
        metas.reserve(ids.size());
        for (const auto& id : ids) metas.push_back(to_image_meta(corpus_.at(id)));
        labeled_[occupation] = filter_and_label(metas, config.min_prob, &training_filter_counts);
        for (const auto& id : ids)
            if (!verdicts_.contains(id))
                verdicts_.emplace(id,
                                  detect_indicators(corpus_.at(id).text, indicator_lexicon_,
                                                    names_).value);
    }

    require_file(config.caption_embeddings_path, "caption embeddings");
    caption_embeddings_ = EmbeddingMatrix::load(config.caption_embeddings_path);
    if (config.prompt_embeddings_path == config.caption_embeddings_path) {
        shared_embeddings_ = true;
    } else {
        require_file(config.prompt_embeddings_path, "prompt embeddings");
        prompt_embeddings_ = EmbeddingMatrix::load(config.prompt_embeddings_path);
    }
    if (config.image_embeddings_path) {
        require_file(*config.image_embeddings_path, "image embeddings");
        image_embeddings_ = EmbeddingMatrix::load(*config.image_embeddings_path);
    }

    require_file(config.generations_path, "generations");
    std::set<std::string> template_ids;
    for (const auto& tmpl : config.prompts.templates())
        template_ids.insert(std::to_string(tmpl.id));
    std::map<std::string, std::map<std::string, std::vector<ImageMeta>>> std_metas;
    std::size_t unknown_occupation = 0;
    for (auto& rec : load_generations(config.generations_path)) {
        if (!config.occupations.contains(rec.occupation)) {
            ++unknown_occupation;
            continue;
        }
        if (template_ids.contains(rec.prompt_id)) {
            std_metas[rec.occupation][rec.prompt_id].push_back(to_image_meta(rec));
        } else {
            generations_cap_[rec.occupation][rec.prompt_id].push_back(std::move(rec));
        }
    }
    if (unknown_occupation > 0)
        load_warnings.push_back(std::to_string(unknown_occupation) +
                                " generation records reference occupations outside the lexicon");
    for (auto& [occupation, by_prompt] : std_metas)
        for (auto& [prompt_id, metas] : by_prompt)
            generations_std_[occupation][prompt_id] =
                filter_and_label(metas, config.min_prob, &generation_filter_counts);
    // Count captions-as-prompts drops once, up front.
    for (const auto& [occupation, by_caption] : generations_cap_)
        for (const auto& [caption_id, records] : by_caption) {
            std::vector<ImageMeta> metas;
            metas.reserve(records.size());
            for (const auto& rec : records) metas.push_back(to_image_meta(rec));
            filter_and_label(metas, config.min_prob, &generation_filter_counts);
        }
}

const std::vector<LabeledImage>& AuditContext::labeled_training(
    const std::string& occupation) const {
    static const std::vector<LabeledImage> empty;
    auto it = labeled_.find(occupation);
    return it == labeled_.end() ? empty : it->second;
}

IndicatorVerdictKind AuditContext::verdict(const std::string& caption_id) const {
    auto it = verdicts_.find(caption_id);
    if (it == verdicts_.end()) throw DataError("no cached verdict for caption '" + caption_id + "'");
    return it->second;
}

const EmbeddingMatrix* AuditContext::caption_embeddings() const {
    return caption_embeddings_ ? &*caption_embeddings_ : nullptr;
}

const EmbeddingMatrix* AuditContext::prompt_embeddings() const {
    if (shared_embeddings_) return caption_embeddings();
    return prompt_embeddings_ ? &*prompt_embeddings_ : nullptr;
}

const EmbeddingMatrix* AuditContext::image_embeddings() const {
    return image_embeddings_ ? &*image_embeddings_ : nullptr;
}

const std::vector<LabeledImage>* AuditContext::standard_generations(
    const std::string& occupation, const std::string& prompt_id) const {
    auto it = generations_std_.find(occupation);
    if (it == generations_std_.end()) return nullptr;
    auto jt = it->second.find(prompt_id);
    return jt == it->second.end() ? nullptr : &jt->second;
}

const std::map<std::string, std::vector<GenerationRecord>>* AuditContext::cap_generations(
    const std::string& occupation) const {
    auto it = generations_cap_.find(occupation);
    return it == generations_cap_.end() ? nullptr : &it->second;
}

namespace {

struct LabelIndex {
    std::unordered_map<std::string_view, GenderLabel> by_id;
    explicit LabelIndex(const std::vector<LabeledImage>& labeled) {
        by_id.reserve(labeled.size());
        for (const auto& img : labeled) by_id.emplace(img.id, img.label);
    }
    double pct_female_of(const std::vector<std::string>& ids) const {
        std::size_t females = 0;
        for (const auto& id : ids)
            if (by_id.at(id) == GenderLabel::Female) ++females;
        return 100.0 * static_cast<double>(females) / static_cast<double>(ids.size());
    }
};

std::optional<double> image_similarity_for(const AuditContext& ctx,
                                           const std::vector<std::string>& subset_ids,
                                           const std::vector<LabeledImage>& generations) {
    const EmbeddingMatrix* m = ctx.image_embeddings();
    if (!m) return std::nullopt;
    std::vector<std::string> train_ids, gen_ids;
    for (const auto& id : subset_ids)
        if (m->contains(id)) train_ids.push_back(id);
    for (const auto& img : generations)
        if (m->contains(img.id)) gen_ids.push_back(img.id);
    if (train_ids.empty() || gen_ids.empty()) return std::nullopt;
    return avg_pairwise_similarity(*m, train_ids, gen_ids).mean_pairwise;
}

MeasurementRow empty_row(SelectionMethod method, const std::string& occupation,
                         const std::string& prompt_id) {
    MeasurementRow row;
    row.method = method;
    row.occupation = occupation;
    row.prompt_id = prompt_id;
    row.excluded = true;
    row.reason = ExclusionReason::EmptySet;
    return row;
}

void measure_grid_method(AuditContext& ctx, SelectionMethod method,
                         std::vector<MeasurementRow>& rows, std::vector<std::string>& warnings) {
    const AuditConfig& config = ctx.config();
    const bool use_nn = method == SelectionMethod::NN || method == SelectionMethod::NNNoIndicator;
    const bool no_indicator =
        method == SelectionMethod::NoIndicator || method == SelectionMethod::NNNoIndicator;
    const EmbeddingMatrix* captions = ctx.caption_embeddings();
    const EmbeddingMatrix* prompts_m = ctx.prompt_embeddings();

    for (const auto& occupation : config.occupations.phrases()) {
        const auto& labeled = ctx.labeled_training(occupation);
        const LabelIndex labels(labeled);

        std::vector<std::string> pool;
        pool.reserve(labeled.size());
        for (const auto& img : labeled)
            if (!no_indicator || ctx.verdict(img.id) == IndicatorVerdictKind::None)
                pool.push_back(img.id);

        // Sampling methods share one subset across prompts.
        TrainingSubset sampled;
        if (!use_nn) {
            sampled = sample_subset(pool, config.sample_n,
                                    derive_seed(config.seed, occupation,
                                                no_indicator ? "select:no_indicator"
                                                             : "select:naive"));
            sampled.occupation = occupation;
            sampled.spec.method = method;
        }

        // NN candidates must have embeddings.
        std::vector<std::string> candidates;
        if (use_nn && embeddings_ok(captions, prompts_m)) {
            std::size_t missing = 0;
            for (const auto& id : pool) {
                if (captions->contains(id))
                    candidates.push_back(id);
                else
                    ++missing;
            }
            if (missing > 0)
                warnings.push_back(occupation + ": " + std::to_string(missing) +
                                   " captions lack embeddings and were skipped by NN selection");
        }

        // Pooled NN variant: one subset per occupation, ranked by mean
        // similarity to all prompt vectors.
        TrainingSubset pooled_nn_subset;
        bool pooled_nn_ready = false;
        if (use_nn && config.pooled_nn && embeddings_ok(captions, prompts_m) &&
            !candidates.empty()) {
            std::vector<std::span<const float>> prompt_vecs;
            for (const auto& tmpl : config.prompts.templates()) {
                const std::string pid = prompt_embedding_id(tmpl.id, occupation);
                if (prompts_m->contains(pid)) prompt_vecs.push_back(prompts_m->vec(pid));
            }
            if (!prompt_vecs.empty()) {
                std::vector<std::pair<double, const std::string*>> scored;
                scored.reserve(candidates.size());
                for (const auto& id : candidates) {
                    double acc = 0.0;
                    for (const auto& pv : prompt_vecs) acc += cosine(captions->vec(id), pv);
                    scored.emplace_back(acc / static_cast<double>(prompt_vecs.size()), &id);
                }
                const auto better = [](const auto& a, const auto& b) {
                    if (a.first != b.first) return a.first > b.first;
                    return *a.second < *b.second;
                };
                const std::size_t take =
                    std::min<std::size_t>(static_cast<std::size_t>(config.k), scored.size());
                std::nth_element(scored.begin(),
                                 scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                                 better);
                scored.resize(take);
                std::sort(scored.begin(), scored.end(), better);
                for (const auto& [sim, id] : scored) pooled_nn_subset.ids.push_back(*id);
                pooled_nn_ready = true;
            }
        }

        for (const auto& tmpl : config.prompts.templates()) {
            const std::string prompt_id = std::to_string(tmpl.id);
            std::vector<std::string> subset_ids;
            bool subset_ok = false;

            if (!use_nn) {
                subset_ids = sampled.ids;
                subset_ok = !subset_ids.empty();
            } else if (config.pooled_nn) {
                subset_ids = pooled_nn_subset.ids;
                subset_ok = pooled_nn_ready && !subset_ids.empty();
            } else if (embeddings_ok(captions, prompts_m) && !candidates.empty()) {
                const std::string pid = prompt_embedding_id(tmpl.id, occupation);
                if (!prompts_m->contains(pid)) {
                    warnings.push_back(occupation + ": no prompt embedding '" + pid + "'");
                } else {
                    const auto neighbors = top_k_neighbors(
                        *captions, prompts_m->vec(pid), candidates,
                        static_cast<std::size_t>(config.k));
                    subset_ids.reserve(neighbors.size());
                    for (const auto& nb : neighbors) subset_ids.push_back(nb.id);
                    subset_ok = !subset_ids.empty();
                }
            }

            if (!subset_ok) {
                rows.push_back(empty_row(method, occupation, prompt_id));
                continue;
            }

            const std::vector<LabeledImage>* gens =
                ctx.standard_generations(occupation, prompt_id);
            if (!gens || gens->empty()) {
                MeasurementRow row = empty_row(method, occupation, prompt_id);
                row.t_pct = labels.pct_female_of(subset_ids);
                row.n_train = subset_ids.size();
                row.short_sample = !use_nn && sampled.short_sample;
                rows.push_back(std::move(row));
                continue;
            }

            BiasMeasurement m;
            m.occupation = occupation;
            m.prompt_id = prompt_id;
            m.method = method;
            m.t_pct = labels.pct_female_of(subset_ids);
            m.g_pct = pct_female(*gens);
            m.n_train = subset_ids.size();
            m.n_gen = gens->size();
            m.short_sample = !use_nn && sampled.short_sample;
            AmplificationResult result = evaluate_amplification(std::move(m));

            MeasurementRow row;
            row.method = method;
            row.occupation = occupation;
            row.prompt_id = prompt_id;
            row.t_pct = result.measurement.t_pct;
            row.g_pct = result.measurement.g_pct;
            row.amplification = result.amplification;
            row.n_train = result.measurement.n_train;
            row.n_gen = result.measurement.n_gen;
            row.excluded = result.excluded;
            row.reason = result.reason;
            row.short_sample = result.measurement.short_sample;
            if (embeddings_ok(captions, prompts_m)) {
                const std::string pid = prompt_embedding_id(tmpl.id, occupation);
                if (prompts_m->contains(pid)) {
                    std::vector<std::string> with_emb;
                    for (const auto& id : subset_ids)
                        if (captions->contains(id)) with_emb.push_back(id);
                    if (!with_emb.empty()) {
                        const std::vector<std::string> pids = {pid};
                        row.mean_similarity =
                            avg_pairwise_similarity(*captions, with_emb, *prompts_m, pids,
                                                    occupation)
                                .mean_pairwise;
                    }
                }
            }
            row.mean_image_similarity = image_similarity_for(ctx, subset_ids, *gens);
            rows.push_back(std::move(row));
        }
    }
}

void measure_cap_method(AuditContext& ctx, std::vector<MeasurementRow>& rows,
                        std::vector<std::string>& warnings) {
    const AuditConfig& config = ctx.config();
    for (const auto& occupation : config.occupations.phrases()) {
        const auto& labeled = ctx.labeled_training(occupation);
        std::vector<std::string> pool;
        pool.reserve(labeled.size());
        for (const auto& img : labeled) pool.push_back(img.id);

        TrainingSubset subset = sample_subset(
            pool, config.sample_n, derive_seed(config.seed, occupation, "select:naive"));
        subset.occupation = occupation;
        subset.spec.method = SelectionMethod::CaptionsAsPrompts;

        const auto* capgens = ctx.cap_generations(occupation);
        if (subset.ids.empty() || !capgens) {
            rows.push_back(empty_row(SelectionMethod::CaptionsAsPrompts, occupation, "captions"));
            rows.push_back(empty_row(SelectionMethod::CaptionsAsPrompts, occupation,
                                     "captions_no_indicator"));
            if (!capgens && !subset.ids.empty())
                warnings.push_back(occupation + ": no captions-as-prompts generations");
            continue;
        }

        auto eval_to_row = [&](const TrainingSubset& s, const std::string& prompt_id) {
            if (s.ids.empty()) {
                rows.push_back(empty_row(SelectionMethod::CaptionsAsPrompts, occupation,
                                         prompt_id));
                return;
            }
            try {
                CaptionsAsPromptsResult r = captions_as_prompts_eval(
                    ctx.corpus(), s, *capgens, config.min_prob, config.images_per_caption);
                MeasurementRow row;
                row.method = SelectionMethod::CaptionsAsPrompts;
                row.occupation = occupation;
                row.prompt_id = prompt_id;
                row.t_pct = r.result.measurement.t_pct;
                row.g_pct = r.result.measurement.g_pct;
                row.amplification = r.result.amplification;
                row.n_train = r.result.measurement.n_train;
                row.n_gen = r.result.measurement.n_gen;
                row.excluded = r.result.excluded;
                row.reason = r.result.reason;
                row.short_sample = s.short_sample;
                if (r.dropped_no_generations > 0)
                    warnings.push_back(occupation + ": " +
                                       std::to_string(r.dropped_no_generations) +
                                       " subset captions had no usable generations");
                rows.push_back(std::move(row));
            } catch (const DataError&) {
                rows.push_back(empty_row(SelectionMethod::CaptionsAsPrompts, occupation,
                                         prompt_id));
            }
        };

        eval_to_row(subset, "captions");

        TrainingSubset no_ind = subset;
        no_ind.ids.clear();
        for (const auto& id : subset.ids)
            if (ctx.verdict(id) == IndicatorVerdictKind::None) no_ind.ids.push_back(id);
        eval_to_row(no_ind, "captions_no_indicator");

        // Gender-match accuracy over single-gender indicated captions.
        std::size_t pairs = 0, agree = 0;
        for (const auto& id : subset.ids) {
            const auto v = ctx.verdict(id);
            if (v != IndicatorVerdictKind::Male && v != IndicatorVerdictKind::Female) continue;
            auto it = capgens->find(id);
            if (it == capgens->end()) continue;
            std::vector<ImageMeta> metas;
            metas.reserve(it->second.size());
            for (const auto& rec : it->second) metas.push_back(to_image_meta(rec));
            const GenderLabel indicated =
                v == IndicatorVerdictKind::Female ? GenderLabel::Female : GenderLabel::Male;
            for (const auto& img : filter_and_label(metas, config.min_prob)) {
                ++pairs;
                if (img.label == indicated) ++agree;
            }
        }
        // Attach the tallies to this occupation's "captions" row.
        for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
            if (it->occupation == occupation && it->prompt_id == "captions" &&
                it->method == SelectionMethod::CaptionsAsPrompts) {
                it->match_pairs = pairs;
                it->match_agree = agree;
                break;
            }
        }
    }
}

}  // namespace

std::vector<MeasurementRow> measure(AuditContext& ctx,
                                    const std::vector<SelectionMethod>& methods,
                                    std::vector<std::string>* warnings_out) {
    std::vector<MeasurementRow> rows;
    std::vector<std::string> local;
    std::vector<std::string>& warnings = warnings_out ? *warnings_out : local;
    for (SelectionMethod method : all_methods()) {
        if (std::find(methods.begin(), methods.end(), method) == methods.end()) continue;
        if (method == SelectionMethod::CaptionsAsPrompts)
            measure_cap_method(ctx, rows, warnings);
        else
            measure_grid_method(ctx, method, rows, warnings);
    }
    return rows;
}

std::vector<IndicatorStats> compute_indicator_stats(const AuditContext& ctx) {
    std::vector<IndicatorStats> stats;
    for (const auto& occupation : ctx.config().occupations.phrases()) {
        const auto& labeled = ctx.labeled_training(occupation);
        if (labeled.empty()) continue;
        stats.push_back(indicator_gender_stats(ctx.corpus(), occupation, labeled,
                                               ctx.indicator_lexicon(), ctx.names()));
    }
    return stats;
}

void aggregate_rows(const std::vector<MeasurementRow>& rows, double significance,
                    std::map<SelectionMethod, MethodReport>& methods,
                    std::optional<CapReport>& cap) {
    methods.clear();
    cap.reset();

    std::map<SelectionMethod, std::map<std::string, std::vector<double>>> included;
    std::map<SelectionMethod, std::map<std::string, std::pair<std::size_t, std::size_t>>>
        occ_included;  // occupation -> (included rows, total rows)
    std::map<SelectionMethod, std::vector<double>> similarities;
    std::vector<double> cap_all, cap_no_ind;
    std::size_t match_pairs = 0, match_agree = 0;
    bool saw_cap = false;

    for (const auto& row : rows) {
        if (row.method == SelectionMethod::CaptionsAsPrompts) {
            saw_cap = true;
            if (!row.excluded && row.amplification) {
                if (row.prompt_id == "captions") cap_all.push_back(*row.amplification);
                if (row.prompt_id == "captions_no_indicator")
                    cap_no_ind.push_back(*row.amplification);
            }
            match_pairs += row.match_pairs;
            match_agree += row.match_agree;
            continue;
        }
        auto& report = methods[row.method];
        report.method = row.method;
        report.per_prompt.try_emplace(row.prompt_id, std::nullopt);
        auto& occ_counts = occ_included[row.method][row.occupation];
        ++occ_counts.second;
        if (!row.excluded && row.amplification) {
            included[row.method][row.prompt_id].push_back(*row.amplification);
            ++occ_counts.first;
        }
        if (row.mean_similarity) similarities[row.method].push_back(*row.mean_similarity);
    }

    for (auto& [method, report] : methods) {
        std::vector<double> prompt_means;
        for (auto& [prompt_id, value] : report.per_prompt) {
            const auto& vals = included[method][prompt_id];
            report.included_per_prompt[prompt_id] = vals.size();
            if (!vals.empty()) {
                double sum = 0.0;
                for (double v : vals) sum += v;
                value = sum / static_cast<double>(vals.size());
                prompt_means.push_back(*value);
            }
            if (vals.size() >= 2) {
                try {
                    report.ttests[prompt_id] = one_sample_ttest(vals, 0.0);
                } catch (const DataError&) {
                    // zero variance; no test
                }
            }
        }
        if (!prompt_means.empty()) report.average = prompt_average(prompt_means);
        for (const auto& [occupation, counts] : occ_included[method])
            if (counts.first == counts.second && counts.second > 0) ++report.included_all_prompts;
        const auto& sims = similarities[method];
        if (!sims.empty()) {
            double sum = 0.0;
            for (double v : sims) sum += v;
            report.mean_similarity = sum / static_cast<double>(sims.size());
        }
    }

    if (saw_cap) {
        CapReport report;
        auto mean_of = [](const std::vector<double>& vals) -> std::optional<double> {
            if (vals.empty()) return std::nullopt;
            double sum = 0.0;
            for (double v : vals) sum += v;
            return sum / static_cast<double>(vals.size());
        };
        report.average_all = mean_of(cap_all);
        report.average_no_indicator = mean_of(cap_no_ind);
        report.included_all = cap_all.size();
        report.included_no_indicator = cap_no_ind.size();
        if (cap_all.size() >= 2) {
            try {
                report.ttest_all = one_sample_ttest(cap_all, 0.0);
            } catch (const DataError&) {}
        }
        if (cap_no_ind.size() >= 2) {
            try {
                report.ttest_no_indicator = one_sample_ttest(cap_no_ind, 0.0);
            } catch (const DataError&) {}
        }
        if (match_pairs > 0)
            report.match_accuracy =
                100.0 * static_cast<double>(match_agree) / static_cast<double>(match_pairs);
        cap = std::move(report);
    }
    (void)significance;
}

// --- emission ---------------------------------------------------------------

namespace {

ordered_json row_to_json(const MeasurementRow& row) {
    ordered_json j;
    j["method"] = std::string(method_name(row.method));
    j["occupation"] = row.occupation;
    j["prompt_id"] = row.prompt_id;
    j["T"] = row.t_pct ? ordered_json(*row.t_pct) : ordered_json(nullptr);
    j["G"] = row.g_pct ? ordered_json(*row.g_pct) : ordered_json(nullptr);
    j["A"] = row.amplification ? ordered_json(*row.amplification) : ordered_json(nullptr);
    j["n_train"] = row.n_train;
    j["n_gen"] = row.n_gen;
    j["excluded"] = row.excluded;
    j["exclusion_reason"] =
        row.reason ? ordered_json(std::string(exclusion_reason_name(*row.reason)))
                   : ordered_json(nullptr);
    j["short_sample"] = row.short_sample;
    j["mean_similarity"] =
        row.mean_similarity ? ordered_json(*row.mean_similarity) : ordered_json(nullptr);
    j["mean_image_similarity"] = row.mean_image_similarity
                                     ? ordered_json(*row.mean_image_similarity)
                                     : ordered_json(nullptr);
    j["match_pairs"] = row.match_pairs;
    j["match_agree"] = row.match_agree;
    return j;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

}  // namespace

void write_measurements(const std::vector<MeasurementRow>& rows,
                        const std::filesystem::path& path) {
    auto out = open_output(path);
    for (const auto& row : rows) out << row_to_json(row).dump() << '\n';
}

std::vector<MeasurementRow> read_measurements(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string(), 0, "cannot open file");
    std::vector<MeasurementRow> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(path.string(), lineno, std::string("invalid JSON: ") + e.what());
        }
        try {
            MeasurementRow row;
            const auto method = method_from_name(j.at("method").get<std::string>());
            if (!method) throw ParseError(path.string(), lineno, "unknown method");
            row.method = *method;
            row.occupation = j.at("occupation").get<std::string>();
            row.prompt_id = j.at("prompt_id").get<std::string>();
            if (!j.at("T").is_null()) row.t_pct = j.at("T").get<double>();
            if (!j.at("G").is_null()) row.g_pct = j.at("G").get<double>();
            if (!j.at("A").is_null()) row.amplification = j.at("A").get<double>();
            row.n_train = j.at("n_train").get<std::size_t>();
            row.n_gen = j.at("n_gen").get<std::size_t>();
            row.excluded = j.at("excluded").get<bool>();
            if (!j.at("exclusion_reason").is_null()) {
                const std::string r = j.at("exclusion_reason").get<std::string>();
                row.reason = r == "direction_switch" ? ExclusionReason::DirectionSwitch
                                                     : ExclusionReason::EmptySet;
            }
            row.short_sample = j.at("short_sample").get<bool>();
            if (!j.at("mean_similarity").is_null())
                row.mean_similarity = j.at("mean_similarity").get<double>();
            if (!j.at("mean_image_similarity").is_null())
                row.mean_image_similarity = j.at("mean_image_similarity").get<double>();
            row.match_pairs = j.at("match_pairs").get<std::size_t>();
            row.match_agree = j.at("match_agree").get<std::size_t>();
            rows.push_back(std::move(row));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string(), lineno, std::string("bad row: ") + e.what());
        }
    }
    return rows;
}

namespace {

std::vector<std::string> grid_prompt_ids(const std::map<SelectionMethod, MethodReport>& methods) {
    std::set<std::string> ids;
    for (const auto& [method, report] : methods)
        for (const auto& [prompt_id, value] : report.per_prompt) ids.insert(prompt_id);
    std::vector<std::string> out(ids.begin(), ids.end());
    std::sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
    });
    return out;
}

void write_grid_txt(const std::map<SelectionMethod, MethodReport>& methods,
                    const std::optional<CapReport>& cap, const std::filesystem::path& path) {
    auto out = open_output(path);
    const auto prompt_ids = grid_prompt_ids(methods);
    out << "Expected bias amplification by method and prompt (pct points)\n";
    out << "--------------------------------------------------------------\n";
    std::ostringstream header;
    header << std::left;
    header.width(28);
    header << "Method";
    for (const auto& pid : prompt_ids) {
        std::string label = "Prompt #" + pid;
        header << std::right;
        header.width(12);
        header << label;
    }
    header << std::right;
    header.width(12);
    header << "Average";
    out << header.str() << "\n";
    for (SelectionMethod method : all_methods()) {
        auto it = methods.find(method);
        if (it == methods.end()) continue;
        std::ostringstream line;
        line << std::left;
        line.width(28);
        line << std::string(method_display_name(method));
        for (const auto& pid : prompt_ids) {
            auto pit = it->second.per_prompt.find(pid);
            std::string cell = "-";
            if (pit != it->second.per_prompt.end() && pit->second)
                cell = format_fixed(*pit->second, 2);
            line << std::right;
            line.width(12);
            line << cell;
        }
        line << std::right;
        line.width(12);
        line << (it->second.average ? format_fixed(*it->second.average, 2) : std::string("-"));
        out << line.str() << "\n";
    }
    out << "\n";
    for (SelectionMethod method : all_methods()) {
        auto it = methods.find(method);
        if (it == methods.end()) continue;
        out << method_display_name(method) << ": included occupations per prompt:";
        for (const auto& pid : prompt_ids) {
            auto cit = it->second.included_per_prompt.find(pid);
            out << " " << (cit != it->second.included_per_prompt.end() ? cit->second : 0);
        }
        out << "; included under all prompts: " << it->second.included_all_prompts << "\n";
        if (it->second.mean_similarity)
            out << method_display_name(method) << ": mean caption-prompt cosine similarity: "
                << format_fixed(*it->second.mean_similarity, 3) << "\n";
    }
    if (cap) {
        out << "\nCaptions as prompts\n";
        out << "  amplification, all captions:          "
            << (cap->average_all ? format_fixed(*cap->average_all, 2) : std::string("-"))
            << "  (n=" << cap->included_all << ")\n";
        out << "  amplification, no-indicator captions: "
            << (cap->average_no_indicator ? format_fixed(*cap->average_no_indicator, 2)
                                          : std::string("-"))
            << "  (n=" << cap->included_no_indicator << ")\n";
        out << "  gender match accuracy:                "
            << (cap->match_accuracy ? format_fixed(*cap->match_accuracy, 2) : std::string("-"))
            << "\n";
    }
}

void write_grid_csv(const std::map<SelectionMethod, MethodReport>& methods,
                    const std::filesystem::path& path) {
    auto out = open_output(path);
    const auto prompt_ids = grid_prompt_ids(methods);
    out << "method";
    for (const auto& pid : prompt_ids) out << ",prompt_" << pid;
    out << ",average\n";
    for (SelectionMethod method : all_methods()) {
        auto it = methods.find(method);
        if (it == methods.end()) continue;
        out << method_name(method);
        for (const auto& pid : prompt_ids) {
            auto pit = it->second.per_prompt.find(pid);
            out << ",";
            if (pit != it->second.per_prompt.end() && pit->second)
                out << format_fixed(*pit->second, 2);
        }
        out << ",";
        if (it->second.average) out << format_fixed(*it->second.average, 2);
        out << "\n";
    }
}

ordered_json method_report_json(const MethodReport& report) {
    ordered_json j;
    ordered_json per_prompt;
    for (const auto& [pid, value] : report.per_prompt)
        per_prompt[pid] = value ? ordered_json(*value) : ordered_json(nullptr);
    j["per_prompt"] = std::move(per_prompt);
    j["average"] = report.average ? ordered_json(*report.average) : ordered_json(nullptr);
    ordered_json counts;
    for (const auto& [pid, n] : report.included_per_prompt) counts[pid] = n;
    j["included_per_prompt"] = std::move(counts);
    j["included_all_prompts"] = report.included_all_prompts;
    j["mean_similarity"] =
        report.mean_similarity ? ordered_json(*report.mean_similarity) : ordered_json(nullptr);
    return j;
}

ordered_json ttest_json(const TTestResult& t, double significance) {
    ordered_json j;
    j["t"] = t.t;
    j["p"] = t.p;
    j["df"] = t.df;
    j["reject_zero_mean"] = t.p < significance;
    return j;
}

ordered_json cap_report_json(const CapReport& cap, double significance) {
    ordered_json j;
    j["average_all"] = cap.average_all ? ordered_json(*cap.average_all) : ordered_json(nullptr);
    j["average_no_indicator"] = cap.average_no_indicator
                                    ? ordered_json(*cap.average_no_indicator)
                                    : ordered_json(nullptr);
    j["included_all"] = cap.included_all;
    j["included_no_indicator"] = cap.included_no_indicator;
    j["match_accuracy"] =
        cap.match_accuracy ? ordered_json(*cap.match_accuracy) : ordered_json(nullptr);
    j["ttest_all"] = cap.ttest_all ? ttest_json(*cap.ttest_all, significance) : ordered_json(nullptr);
    j["ttest_no_indicator"] = cap.ttest_no_indicator
                                  ? ttest_json(*cap.ttest_no_indicator, significance)
                                  : ordered_json(nullptr);
    return j;
}

}  // namespace

void write_report_files(const std::vector<MeasurementRow>& rows, double significance,
                        const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::map<SelectionMethod, MethodReport> methods;
    std::optional<CapReport> cap;
    aggregate_rows(rows, significance, methods, cap);

    write_grid_txt(methods, cap, out_dir / "report.txt");
    write_grid_csv(methods, out_dir / "report.csv");

    {
        ordered_json j;
        for (SelectionMethod method : all_methods()) {
            auto it = methods.find(method);
            if (it == methods.end()) continue;
            j[std::string(method_name(method))] = method_report_json(it->second);
        }
        if (cap) j["captions_as_prompts"] = cap_report_json(*cap, significance);
        auto out = open_output(out_dir / "report.json");
        out << j.dump(2) << '\n';
    }

    // Scatter TSVs: one per (method, prompt), axes match the report grid.
    {
        std::map<std::pair<SelectionMethod, std::string>, std::vector<const MeasurementRow*>>
            groups;
        for (const auto& row : rows)
            if (row.t_pct && row.g_pct)
                groups[{row.method, row.prompt_id}].push_back(&row);
        for (const auto& [key, group] : groups) {
            const auto& [method, prompt_id] = key;
            std::string name = "scatter_" + std::string(method_name(method));
            if (method != SelectionMethod::CaptionsAsPrompts)
                name += "_prompt" + prompt_id;
            else if (prompt_id == "captions_no_indicator")
                name += "_no_indicator";
            name += ".tsv";
            auto out = open_output(out_dir / name);
            out << "occupation\tpct_female_training\tpct_female_generated\texcluded\n";
            for (const auto* row : group)
                out << row->occupation << '\t' << format_fixed(*row->t_pct, 4) << '\t'
                    << format_fixed(*row->g_pct, 4) << '\t' << (row->excluded ? 1 : 0) << '\n';
        }
    }

    // Exclusions, plus occupations that switch direction under every prompt.
    {
        auto out = open_output(out_dir / "exclusions.txt");
        out << "# method\toccupation\tprompt\treason\n";
        for (const auto& row : rows) {
            if (!row.excluded) continue;
            out << method_name(row.method) << '\t' << row.occupation << '\t' << row.prompt_id
                << '\t' << (row.reason ? exclusion_reason_name(*row.reason) : "unknown") << '\n';
        }
        for (SelectionMethod method : all_methods()) {
            std::map<std::string, std::pair<std::size_t, std::size_t>> switches;  // (switch, rows)
            for (const auto& row : rows) {
                if (row.method != method || row.method == SelectionMethod::CaptionsAsPrompts)
                    continue;
                auto& c = switches[row.occupation];
                ++c.second;
                if (row.excluded && row.reason == ExclusionReason::DirectionSwitch) ++c.first;
            }
            std::vector<std::string> all_switch;
            for (const auto& [occupation, c] : switches)
                if (c.second > 0 && c.first == c.second) all_switch.push_back(occupation);
            if (!all_switch.empty()) {
                out << "# " << method_name(method) << ": direction switch under every prompt:";
                for (const auto& occupation : all_switch) out << ' ' << occupation;
                out << '\n';
            }
        }
    }

    // Per-prompt one-sample t-tests of the included amplification values.
    {
        ordered_json j;
        j["significance"] = significance;
        ordered_json per_method;
        for (SelectionMethod method : all_methods()) {
            auto it = methods.find(method);
            if (it == methods.end()) continue;
            ordered_json tests;
            for (const auto& [pid, t] : it->second.ttests)
                tests[pid] = ttest_json(t, significance);
            per_method[std::string(method_name(method))] = std::move(tests);
        }
        j["methods"] = std::move(per_method);
        if (cap) {
            if (cap->ttest_all) j["captions_as_prompts_all"] = ttest_json(*cap->ttest_all, significance);
            if (cap->ttest_no_indicator)
                j["captions_as_prompts_no_indicator"] =
                    ttest_json(*cap->ttest_no_indicator, significance);
        }
        auto out = open_output(out_dir / "ttests.json");
        out << j.dump(2) << '\n';
    }

    // Similarity rows (text + image).
    {
        auto out = open_output(out_dir / "similarity.tsv");
        out << "method\toccupation\tprompt_id\ttext_similarity\timage_similarity\n";
        for (const auto& row : rows) {
            if (!row.mean_similarity && !row.mean_image_similarity) continue;
            out << method_name(row.method) << '\t' << row.occupation << '\t' << row.prompt_id
                << '\t'
                << (row.mean_similarity ? format_fixed(*row.mean_similarity, 4) : "-") << '\t'
                << (row.mean_image_similarity ? format_fixed(*row.mean_image_similarity, 4)
                                              : "-")
                << '\n';
        }
    }
}

void write_indicator_stats(const std::vector<IndicatorStats>& stats,
                           const std::optional<PearsonResult>& correlation, double significance,
                           const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    {
        auto out = open_output(out_dir / "indicator_stats.tsv");
        out << "occupation\tn\tpct_with_indicator\tpct_female_indicated\tpct_female_images\n";
        for (const auto& s : stats)
            out << s.occupation << '\t' << s.n << '\t' << format_fixed(s.pct_with_indicator(), 4)
                << '\t' << format_fixed(s.pct_female_indicated(), 4) << '\t'
                << format_fixed(s.pct_female_images(), 4) << '\n';
    }
    {
        ordered_json j;
        if (!stats.empty()) {
            double macro = 0.0;
            std::size_t total = 0, indicated = 0;
            for (const auto& s : stats) {
                macro += s.pct_with_indicator();
                total += s.n;
                indicated += s.n_indicated;
            }
            j["macro_pct_with_indicator"] = macro / static_cast<double>(stats.size());
            j["pooled_pct_with_indicator"] =
                100.0 * static_cast<double>(indicated) / static_cast<double>(total);
            j["occupations"] = stats.size();
        }
        if (correlation) {
            ordered_json c;
            c["r"] = correlation->r;
            c["p"] = correlation->p;
            c["n"] = correlation->n;
            c["significant"] = correlation->p < significance;
            j["correlation_pct_female_images_vs_pct_female_indicated"] = std::move(c);
        }
        auto out = open_output(out_dir / "correlation.json");
        out << j.dump(2) << '\n';
    }
}

PipelineSummary run_pipeline(const AuditConfig& config, const PipelineOptions& options) {
    AuditContext ctx(config);
    PipelineSummary summary;
    summary.warnings = ctx.load_warnings;

    std::vector<MeasurementRow> rows = measure(ctx, options.methods, &summary.warnings);

    const auto stats = compute_indicator_stats(ctx);
    summary.occupations_with_data = stats.size();
    if (stats.size() < config.occupations.size())
        summary.warnings.push_back(
            std::to_string(config.occupations.size() - stats.size()) +
            " occupations have no usable training data");
    if (stats.size() >= 3) {
        std::vector<double> xs, ys;
        for (const auto& s : stats) {
            xs.push_back(s.pct_female_images());
            ys.push_back(s.pct_female_indicated());
        }
        try {
            summary.indicator_correlation = pearson(xs, ys);
        } catch (const DataError&) {
            summary.warnings.push_back("indicator correlation skipped: zero variance");
        }
    } else if (!stats.empty()) {
        summary.warnings.push_back("indicator correlation skipped: fewer than 3 occupations");
    }
    if (!stats.empty()) {
        double macro = 0.0;
        std::size_t total = 0, indicated = 0;
        for (const auto& s : stats) {
            macro += s.pct_with_indicator();
            total += s.n;
            indicated += s.n_indicated;
        }
        summary.macro_pct_with_indicator = macro / static_cast<double>(stats.size());
        summary.pooled_pct_with_indicator =
            100.0 * static_cast<double>(indicated) / static_cast<double>(total);
    }
    summary.training_filter = ctx.training_filter_counts;
    summary.generation_filter = ctx.generation_filter_counts;

    aggregate_rows(rows, config.significance, summary.methods, summary.cap);

    // Emit the run directory.
    std::filesystem::create_directories(options.out_dir);
    {
        auto out = open_output(options.out_dir / "config.snapshot.cfg");
        out << config.canonical();
    }
    write_measurements(rows, options.out_dir / "measurements.jsonl");
    write_report_files(rows, config.significance, options.out_dir);
    write_indicator_stats(stats, summary.indicator_correlation, config.significance,
                          options.out_dir);

    {
        ordered_json j;
        ordered_json methods_json;
        for (SelectionMethod method : all_methods()) {
            auto it = summary.methods.find(method);
            if (it == summary.methods.end()) continue;
            methods_json[std::string(method_name(method))] = method_report_json(it->second);
        }
        j["methods"] = std::move(methods_json);
        j["captions_as_prompts"] = summary.cap
                                       ? cap_report_json(*summary.cap, config.significance)
                                       : ordered_json(nullptr);
        if (summary.indicator_correlation) {
            ordered_json c;
            c["r"] = summary.indicator_correlation->r;
            c["p"] = summary.indicator_correlation->p;
            c["n"] = summary.indicator_correlation->n;
            j["indicator_correlation"] = std::move(c);
        } else {
            j["indicator_correlation"] = nullptr;
        }
        j["macro_pct_with_indicator"] = summary.macro_pct_with_indicator
                                            ? ordered_json(*summary.macro_pct_with_indicator)
                                            : ordered_json(nullptr);
        j["pooled_pct_with_indicator"] = summary.pooled_pct_with_indicator
                                             ? ordered_json(*summary.pooled_pct_with_indicator)
                                             : ordered_json(nullptr);
        ordered_json filters;
        auto counts_json = [](const FilterCounts& c) {
            ordered_json f;
            f["kept"] = c.kept;
            f["dropped_face_count"] = c.dropped_face_count;
            f["dropped_missing_prob"] = c.dropped_missing_prob;
            f["dropped_low_confidence"] = c.dropped_low_confidence;
            return f;
        };
        filters["training"] = counts_json(summary.training_filter);
        filters["generation"] = counts_json(summary.generation_filter);
        j["filter_counts"] = std::move(filters);
        j["occupations_with_data"] = summary.occupations_with_data;
        j["warnings"] = summary.warnings;
        auto out = open_output(options.out_dir / "summary.json");
        out << j.dump(2) << '\n';
    }
    return summary;
}

}  // namespace biasamp
