#pragma once

#include "common.hpp"
#include "ingest.hpp"
#include "sequencer.hpp"
#include "spam.hpp"
#include "spam_oracle.hpp"
#include "profiles.hpp"
#include "stats.hpp"
#include "cluster.hpp"
#include "synth.hpp"
#include "pipeline.hpp"
