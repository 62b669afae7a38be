#pragma once

#include "planforge/config.hpp"
#include "planforge/corpus.hpp"
#include "planforge/error.hpp"
#include "planforge/llmclient.hpp"
#include "planforge/mixture.hpp"
#include "planforge/pipeline.hpp"
#include "planforge/rouge.hpp"
#include "planforge/scoring.hpp"
#include "planforge/sxs.hpp"
#include "planforge/synthesis.hpp"
#include "planforge/text.hpp"
