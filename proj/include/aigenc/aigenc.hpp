#pragma once

// Everything: concepts, environment, encoder, matching, memory, reasoning, blending, agent and experiments.

#include "aigenc/experiment.hpp"
