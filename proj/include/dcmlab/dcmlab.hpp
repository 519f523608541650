#pragma once

#include "dcmlab/rng.hpp"
#include "dcmlab/error.hpp"
#include "dcmlab/parallel.hpp"
#include "dcmlab/stats.hpp"
#include "dcmlab/degseq.hpp"
#include "dcmlab/multidigraph.hpp"
#include "dcmlab/dcm.hpp"
#include "dcmlab/digraph.hpp"
#include "dcmlab/stationary.hpp"
#include "dcmlab/walk.hpp"
#include "dcmlab/rde.hpp"
#include "dcmlab/io.hpp"
#include "dcmlab/experiments.hpp"
