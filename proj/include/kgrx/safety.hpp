#pragma once

#include "kgrx/candidate.hpp"
#include "kgrx/kg_store.hpp"
#include "kgrx/record.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace kgrx {

/// Weights of the three safety sub-scores plus the rejection threshold.
/// Construction enforces nonnegative weights summing to 1 (within 1e-9) and
/// tau in [0, 1]; violations throw ConfigError.
class SafetyWeights {
public:
    SafetyWeights() = default;
    SafetyWeights(double w_dose, double w_allergy, double w_interaction, double tau);

    double w_dose() const noexcept { return w_dose_; }
    double w_allergy() const noexcept { return w_allergy_; }
    double w_interaction() const noexcept { return w_interaction_; }
    double tau() const noexcept { return tau_; }

    friend bool operator==(const SafetyWeights&, const SafetyWeights&) = default;

private:
    double w_dose_ = 0.4;
    double w_allergy_ = 0.4;
    double w_interaction_ = 0.2;
    double tau_ = 0.8;
};

/// In reporting order.
enum class Violation {
    AllergyConflict,
    AbsoluteDoseExceeded,
    NoDoseRuleForAge,
    ComorbidityContraindication,
    FrequencyOutOfRange,
    DurationOutOfRange,
};

enum class Verdict { Pass, RejectHardRule, RejectClassifier, RejectThreshold };

std::string_view to_string(Violation v) noexcept;
std::string_view to_string(Verdict v) noexcept;
std::optional<Violation> parse_violation(std::string_view s) noexcept;
std::optional<Verdict> parse_verdict(std::string_view s) noexcept;

struct SafetyReport {
    double s_dose = 0.0;
    double s_allergy = 0.0;
    double s_interaction = 0.0;
    double s_safety = 0.0;
    std::vector<Violation> hard_violations;
    double classifier_unsafe_prob = 0.0;
    std::optional<Verdict> verdict; ///< unset until validate()
    SafetyWeights weights;

    friend bool operator==(const SafetyReport&, const SafetyReport&) = default;
};

/// 1 inside the age-appropriate band, falling linearly to 0 at 50% relative
/// deviation from the nearest bound; 0 when no band covers the age.
double s_dose(const AntibioticCandidate& c, const PatientProfile& p, const KnowledgeGraph& g);

/// 0 when the drug (directly or through a class it belongs to) is
/// cross-reactive with any patient allergy, else 1.
double s_allergy(const AntibioticCandidate& c, const PatientProfile& p, const KnowledgeGraph& g);

/// 1 minus the largest interaction severity with any current medication.
double s_interaction(const AntibioticCandidate& c, const PatientProfile& p, const KnowledgeGraph& g);

/// Sub-scores and their weighted sum; verdict left unset.
SafetyReport safety_score(const AntibioticCandidate& c, const PatientProfile& p, const KnowledgeGraph& g,
                          const SafetyWeights& w);

/// Deterministic rule layer, violations in enum order.
std::vector<Violation> hard_rule_check(const AntibioticCandidate& c, const PatientProfile& p, const KnowledgeGraph& g);

inline constexpr std::size_t kClassifierFeatures = 8;
using ClassifierFeatures = std::array<double, kClassifierFeatures>;

/// (s_dose, s_allergy, s_interaction, age/216, weight/100, interaction edge
/// count, max interaction severity, signed dose position in band clipped to
/// [-1, 1]; 0 without a band).
ClassifierFeatures classifier_features(const AntibioticCandidate& c, const PatientProfile& p, const KnowledgeGraph& g);

/// Logistic unsafe-candidate model.
struct SafetyClassifier {
    ClassifierFeatures weights{};
    double bias = 0.0;

    double unsafe_probability(const ClassifierFeatures& x) const noexcept;

    friend bool operator==(const SafetyClassifier&, const SafetyClassifier&) = default;
};

struct LabeledCandidate {
    AntibioticCandidate candidate;
    PatientProfile profile;
    bool unsafe = false;
};

/// Perturbed candidates around the dose rules of `graph`, labeled by
/// hard_rule_check (unsafe iff any violation).
std::vector<LabeledCandidate> generate_classifier_examples(const KnowledgeGraph& graph, std::size_t n,
                                                           std::uint64_t seed);

struct ClassifierTrainOptions {
    std::size_t epochs = 3000;
    double learning_rate = 0.5;
};

struct ClassifierTrainResult {
    SafetyClassifier classifier;
    std::vector<double> epoch_loss; ///< mean log-loss before training and after each epoch
};

/// Mean logistic loss and its gradient (weights then bias) over a batch.
double logistic_loss(const SafetyClassifier& model, std::span<const ClassifierFeatures> x, std::span<const int> y,
                     std::array<double, kClassifierFeatures + 1>* gradient = nullptr);

/// Full-batch gradient descent from zero weights. The seed shuffles the
/// accumulation order. Throws DegenerateLabels when only one class is present.
ClassifierTrainResult train_safety_classifier(std::span<const LabeledCandidate> examples, const KnowledgeGraph& graph,
                                              std::uint64_t seed, const ClassifierTrainOptions& options = {});

/// Classifier used when none is supplied: trained on 2,000 generated examples
/// with seed 7.
SafetyClassifier default_classifier(const KnowledgeGraph& graph);

/// Area under the ROC curve with ties counted one half.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

inline constexpr double kClassifierThreshold = 0.5;

/// Dual-layer validation: hard rules, then the classifier, then the
/// weighted-score threshold. All scores are reported whatever the verdict.
SafetyReport validate(const AntibioticCandidate& c, const PatientProfile& p, const KnowledgeGraph& g,
                      const SafetyWeights& w, const SafetyClassifier& classifier);

} // namespace kgrx
