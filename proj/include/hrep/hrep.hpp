#pragma once

#include "hrep/bench.hpp"
#include "hrep/cost_model.hpp"
#include "hrep/csv.hpp"
#include "hrep/encoding.hpp"
#include "hrep/error.hpp"
#include "hrep/hrca.hpp"
#include "hrep/json_io.hpp"
#include "hrep/placement.hpp"
#include "hrep/query.hpp"
#include "hrep/record.hpp"
#include "hrep/replica_engine.hpp"
#include "hrep/schema.hpp"
#include "hrep/sstable.hpp"
#include "hrep/stats.hpp"
#include "hrep/store.hpp"
#include "hrep/value.hpp"
#include "hrep/workload.hpp"
