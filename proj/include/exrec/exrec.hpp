#pragma once

// Everything in one include.

#include "exrec/baselines.hpp"
#include "exrec/config.hpp"
#include "exrec/container.hpp"
#include "exrec/csv.hpp"
#include "exrec/error.hpp"
#include "exrec/evaluator.hpp"
#include "exrec/features.hpp"
#include "exrec/landmarks.hpp"
#include "exrec/repcount.hpp"
#include "exrec/rng.hpp"
#include "exrec/seqnet/adam.hpp"
#include "exrec/seqnet/lstm.hpp"
#include "exrec/seqnet/model.hpp"
#include "exrec/seqnet/network.hpp"
#include "exrec/stream.hpp"
#include "exrec/synth.hpp"
#include "exrec/trainer.hpp"
#include "exrec/voting.hpp"
#include "exrec/window_io.hpp"
