#pragma once

// Umbrella header for the whole library.

#include "vatspam/adversarial.hpp"
#include "vatspam/checkpoint.hpp"
#include "vatspam/data.hpp"
#include "vatspam/error.hpp"
#include "vatspam/gradcheck.hpp"
#include "vatspam/interpret.hpp"
#include "vatspam/model.hpp"
#include "vatspam/pipeline.hpp"
#include "vatspam/report.hpp"
#include "vatspam/rng.hpp"
#include "vatspam/synth.hpp"
#include "vatspam/tensor.hpp"
#include "vatspam/tokenize.hpp"
#include "vatspam/train.hpp"
