#pragma once

// Umbrella header for the whole library.

#include "quotescrub/bloom_sketch.hpp"
#include "quotescrub/clients.hpp"
#include "quotescrub/corpus_index.hpp"
#include "quotescrub/errors.hpp"
#include "quotescrub/manifest.hpp"
#include "quotescrub/metrics.hpp"
#include "quotescrub/quote_extract.hpp"
#include "quotescrub/report.hpp"
#include "quotescrub/scrub.hpp"
#include "quotescrub/text_normalize.hpp"
