#pragma once

#include "core_model.hpp"
#include "numeric.hpp"
#include "png_io.hpp"
#include "ingest_io.hpp"
#include "mask_geometry.hpp"
#include "sleeper_sampling.hpp"
#include "bias_correction.hpp"
#include "sufficiency.hpp"
#include "pipeline.hpp"
#include "synth_oracle.hpp"
#include "eval_harness.hpp"
#include "overlay.hpp"
#include "commands.hpp"
