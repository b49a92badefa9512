#pragma once

#include "tickrand/bitcore.hpp"
#include "tickrand/bitstring.hpp"
#include "tickrand/error.hpp"
#include "tickrand/ingest.hpp"
#include "tickrand/pipeline.hpp"
#include "tickrand/rngsrc.hpp"
#include "tickrand/sanity.hpp"
#include "tickrand/special.hpp"
#include "tickrand/stats/entropy.hpp"
#include "tickrand/stats/nist.hpp"
#include "tickrand/stats/registry.hpp"
#include "tickrand/stats/result.hpp"
#include "tickrand/stats/testu01.hpp"
