#pragma once

// Hand-labeled caption fixture for the explicit-indicator detector: gender
// words, plurals, pronouns, possessives, gendered names (with the
// capitalization rules), mixed cases, near-miss tokens, and implicit-only
// negatives. Expected verdicts assume the bundled data/names.tsv table and
// the default (plural-including) lexicon.

#include <string_view>
#include <vector>

#include "biasamp/indicator.hpp"

namespace fixtures {

struct LabeledCaption {
    std::string_view text;
    biasamp::IndicatorVerdictKind expected;
};

inline const std::vector<LabeledCaption>& indicator_captions() {
    using K = biasamp::IndicatorVerdictKind;
    static const std::vector<LabeledCaption> captions = {
        // gender words
        {"Portrait of smiling young female mechanic inspecting a CV joint on a car in an auto "
         "repair shop",
         K::Female},
        {"MALE NURSE IN THE PEDIATRIC WARD", K::Male},
        {"FEMALE MECHANIC AT WORK", K::Female},
        {"A woman welding in the workshop", K::Female},
        {"a young man repairing a bicycle wheel", K::Male},
        {"the lady at the reception desk smiled", K::Female},
        {"a boy feeding pigeons in the square", K::Male},
        {"A gentleman in a tweed jacket reading the newspaper", K::Male},
        {"a gent with a pocket watch outside the bank", K::Male},
        // plurals
        {"two ladies laughing at a cafe table", K::Female},
        {"gentlemen in formal suits at the gala", K::Male},
        {"the men at work on the scaffolding", K::Male},
        {"women engineers at the conference", K::Female},
        {"boys playing football after school", K::Male},
        {"girls coding club meets on thursdays", K::Female},
        // pronouns
        {"he adjusts the telescope at dusk", K::Male},
        {"she conducts the orchestra with precision", K::Female},
        {"the chef plated the dessert himself", K::Male},
        {"the surgeon reviewed the scans herself", K::Female},
        {"his workshop smells of cedar", K::Male},
        {"her studio overlooks the harbor", K::Female},
        {"hers was the fastest lap of the day", K::Female},
        {"him and the crew unload the nets", K::Male},
        // possessives
        {"woman's hands holding a fresh loaf of bread", K::Female},
        {"the girl's notebook sat on the desk", K::Female},
        {"the garage holds Brad's drum kit", K::Male},
        // names, detected
        {"Brad Draper, percussion teacher", K::Male},
        {"Leana Wen, Planned Parenthood president", K::Female},
        {"Leana Wen speaks at the rally", K::Female},
        {"portrait of Maria at the window", K::Female},
        {"Jo Anne Young Art Teacher", K::Female},
        {"Meet the team. Brad Draper will teach percussion", K::Male},
        {"Gentle Ben waits by the door", K::Male},
        {"Jamie Okafor, touring musician", K::Female},
        {"Terry Novak at the drafting table", K::Male},
        // names, not detected by the capitalization rules
        {"Maria lights the kiln", K::None},
        {"patrick oconnell Classical Guitar Teacher", K::None},
        {"brad draper, percussion teacher", K::None},
        {"Casey Reyes waters the garden", K::None},
        {"Dr. Patel examines the x ray", K::None},
        {"BCCI president N Srinivasan at the annual meeting", K::None},
        {"New Schaumburg Business Association President visits local school", K::None},
        {"Indiana Pacers president of basketball operations speaks", K::None},
        // mixed
        {"he and she met at the conference", K::Mixed},
        {"a man and a woman dancing tango", K::Mixed},
        {"Teachers Brad and Susan at the academy", K::Mixed},
        {"female and male students in the lab", K::Mixed},
        // near-miss tokens
        {"manager of the team announces the lineup", K::None},
        {"the gentle hum of the server room", K::None},
        {"mankind's greatest inventions on display", K::None},
        {"history lecture in the main hall", K::None},
        {"shells collected from the shore", K::None},
        {"hermit crab in a tide pool", K::None},
        {"the boycott continues downtown", K::None},
        // implicit-only negatives
        {"Muscular bearded athlete drinks water after good workout session in city park", K::None},
        {"Portrait of a salesperson standing in front of electrical wire spool with arms crossed "
         "in hardware store",
         K::None},
        {"teacher/author in the 80s sits in yoga lotus pose", K::None},
        {"pregnant yoga instructor leading a class", K::None},
        {"bride and groom exchange rings at sunset", K::None},
        {"a photo of the face of an engineer", K::None},
    };
    return captions;
}

}  // namespace fixtures
