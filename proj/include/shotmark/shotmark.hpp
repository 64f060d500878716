#pragma once

#include "shotmark/bbox.hpp"
#include "shotmark/config.hpp"
#include "shotmark/embedder.hpp"
#include "shotmark/error.hpp"
#include "shotmark/eval.hpp"
#include "shotmark/geometry.hpp"
#include "shotmark/imaging.hpp"
#include "shotmark/io.hpp"
#include "shotmark/localizer.hpp"
#include "shotmark/metrics.hpp"
#include "shotmark/pipeline.hpp"
#include "shotmark/rectify.hpp"
#include "shotmark/report.hpp"
#include "shotmark/simulator.hpp"
#include "shotmark/synth.hpp"
