// SPDX-License-Identifier: Apache-2.0
#pragma once

// A scripted stand-in for the vision-language model. It answers every pipeline
// exchange from a CreatureDesign, so recorded transcripts are reproducible.

#include "fixtures/creatures.hpp"

#include <morphoforge/vlm/gateway.hpp>

#include <string>
#include <utility>
#include <vector>

namespace morphoforge::fixtures
{

struct DesignerScript
{
    CreatureDesign design;
    /// Edit list answered in visual round k (1-based index k-1); later rounds answer [].
    std::vector<nlohmann::json> visual;
    /// Feedback text and the edit list it is answered with; unknown text answers [].
    std::vector<std::pair<std::string, nlohmann::json>> human;
};

/// Scripts used for the shipped transcripts, keyed by label.
auto designer_script(std::string const& label) -> DesignerScript;
auto all_scripts() -> std::vector<DesignerScript>;

auto designer_handler(DesignerScript script) -> vlm::CallbackBackend::Handler;

/// Reference image for a creature: the hand-built design rendered from the three-quarter view.
auto reference_png(CreatureDesign const& design) -> std::string;

} // namespace morphoforge::fixtures
