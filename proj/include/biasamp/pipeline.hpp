#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "biasamp/config.hpp"
#include "biasamp/embednn.hpp"
#include "biasamp/indicator.hpp"
#include "biasamp/metrics.hpp"
#include "biasamp/stats.hpp"

namespace biasamp {

/// One measured (method, occupation, prompt) cell. Empty-set cells carry no
/// T/G values but still appear, flagged excluded.
struct MeasurementRow {
    SelectionMethod method = SelectionMethod::Naive;
    std::string occupation;
    std::string prompt_id;  // template id, "captions", or "captions_no_indicator"
    std::optional<double> t_pct;
    std::optional<double> g_pct;
    std::optional<double> amplification;
    std::size_t n_train = 0;
    std::size_t n_gen = 0;
    bool excluded = false;
    std::optional<ExclusionReason> reason;
    bool short_sample = false;
    std::optional<double> mean_similarity;        // subset-to-prompt text cosine
    std::optional<double> mean_image_similarity;  // training-to-generated image cosine
    std::size_t match_pairs = 0;  // captions-as-prompts gender-match bookkeeping
    std::size_t match_agree = 0;
};

struct MethodReport {
    SelectionMethod method = SelectionMethod::Naive;
    std::map<std::string, std::optional<double>> per_prompt;  // prompt id -> E[A]
    std::map<std::string, std::size_t> included_per_prompt;
    std::size_t included_all_prompts = 0;  // occupations included under every prompt
    std::optional<double> average;         // mean of per-prompt values
    std::map<std::string, TTestResult> ttests;
    std::optional<double> mean_similarity;  // macro over occupations and prompts
};

struct CapReport {
    std::optional<double> average_all;           // E[A], all captions
    std::optional<double> average_no_indicator;  // E[A], indicator-free captions only
    std::optional<double> match_accuracy;        // pct over indicator-bearing captions
    std::optional<TTestResult> ttest_all;
    std::optional<TTestResult> ttest_no_indicator;
    std::size_t included_all = 0;
    std::size_t included_no_indicator = 0;
};

struct PipelineSummary {
    std::map<SelectionMethod, MethodReport> methods;  // prompt-grid methods only
    std::optional<CapReport> cap;
    std::optional<PearsonResult> indicator_correlation;
    std::optional<double> macro_pct_with_indicator;
    std::optional<double> pooled_pct_with_indicator;
    FilterCounts training_filter;
    FilterCounts generation_filter;
    std::size_t occupations_with_data = 0;
    std::vector<std::string> warnings;
};

struct PipelineOptions {
    std::vector<SelectionMethod> methods = all_methods();
    std::filesystem::path out_dir;
};

/// Loaded inputs plus per-occupation caches shared by the measurement passes.
class AuditContext {
public:
    explicit AuditContext(const AuditConfig& config);

    const AuditConfig& config() const { return config_; }
    const Corpus& corpus() const { return corpus_; }
    const IndicatorLexicon& indicator_lexicon() const { return indicator_lexicon_; }
    const NameGenderTable& names() const { return names_; }
    const std::map<std::string, std::vector<std::string>>& query_results() const {
        return query_results_;
    }
    /// Labeled training images for one occupation's query results.
    const std::vector<LabeledImage>& labeled_training(const std::string& occupation) const;
    IndicatorVerdictKind verdict(const std::string& caption_id) const;
    const EmbeddingMatrix* caption_embeddings() const;
    const EmbeddingMatrix* prompt_embeddings() const;
    const EmbeddingMatrix* image_embeddings() const;
    /// Filtered and labeled standard-prompt generations, or nullptr.
    const std::vector<LabeledImage>* standard_generations(const std::string& occupation,
                                                          const std::string& prompt_id) const;
    const std::map<std::string, std::vector<GenerationRecord>>* cap_generations(
        const std::string& occupation) const;

    FilterCounts training_filter_counts;
    FilterCounts generation_filter_counts;
    std::vector<std::string> load_warnings;

private:
    AuditConfig config_;
    Corpus corpus_;
    IndicatorLexicon indicator_lexicon_;
    NameGenderTable names_;
    std::map<std::string, std::vector<std::string>> query_results_;
    std::map<std::string, std::vector<LabeledImage>> labeled_;
    std::unordered_map<std::string, IndicatorVerdictKind, TransparentStringHash, std::equal_to<>>
        verdicts_;
    std::optional<EmbeddingMatrix> caption_embeddings_;
    std::optional<EmbeddingMatrix> prompt_embeddings_;
    std::optional<EmbeddingMatrix> image_embeddings_;
    bool shared_embeddings_ = false;
    std::map<std::string, std::map<std::string, std::vector<LabeledImage>>> generations_std_;
    std::map<std::string, std::map<std::string, std::vector<GenerationRecord>>> generations_cap_;
};

/// Runs the selections and measurements for the requested methods; rows come
/// back in canonical (method, occupation, prompt) order.
std::vector<MeasurementRow> measure(AuditContext& context,
                                    const std::vector<SelectionMethod>& methods,
                                    std::vector<std::string>* warnings = nullptr);

/// Per-occupation indicator statistics over all labeled training images.
std::vector<IndicatorStats> compute_indicator_stats(const AuditContext& context);

/// Aggregates rows into the report structures (pure; reusable from files).
void aggregate_rows(const std::vector<MeasurementRow>& rows, double significance,
                    std::map<SelectionMethod, MethodReport>& methods,
                    std::optional<CapReport>& cap);

/// Select subsets -> filter/label -> measure -> aggregate -> emit the report
/// grid, scatter TSVs, exclusion list, indicator statistics, correlation, and
/// t-test results into options.out_dir. Deterministic: identical config and
/// seed produce byte-identical files.
PipelineSummary run_pipeline(const AuditConfig& config, const PipelineOptions& options);

// Emission helpers shared with the CLI subcommands.
void write_measurements(const std::vector<MeasurementRow>& rows,
                        const std::filesystem::path& path);
std::vector<MeasurementRow> read_measurements(const std::filesystem::path& path);
void write_report_files(const std::vector<MeasurementRow>& rows, double significance,
                        const std::filesystem::path& out_dir);
void write_indicator_stats(const std::vector<IndicatorStats>& stats,
                           const std::optional<PearsonResult>& correlation, double significance,
                           const std::filesystem::path& out_dir);

}  // namespace biasamp
