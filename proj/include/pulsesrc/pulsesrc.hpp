#pragma once

#include "pulsesrc/classify.hpp"
#include "pulsesrc/config.hpp"
#include "pulsesrc/corpus.hpp"
#include "pulsesrc/dictionary.hpp"
#include "pulsesrc/dictionary_io.hpp"
#include "pulsesrc/error.hpp"
#include "pulsesrc/evaluation.hpp"
#include "pulsesrc/kmeans.hpp"
#include "pulsesrc/pipeline.hpp"
#include "pulsesrc/record_csv.hpp"
#include "pulsesrc/screening.hpp"
#include "pulsesrc/sparse.hpp"
#include "pulsesrc/synth.hpp"
#include "pulsesrc/training.hpp"
#include "pulsesrc/waveform.hpp"
