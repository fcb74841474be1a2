#pragma once

#include "fuzzprint/backend.hpp"
#include "fuzzprint/checksum.hpp"
#include "fuzzprint/corpus.hpp"
#include "fuzzprint/error.hpp"
#include "fuzzprint/fingerprint.hpp"
#include "fuzzprint/fuzzgen_ftp.hpp"
#include "fuzzprint/fuzzgen_os.hpp"
#include "fuzzprint/matcher.hpp"
#include "fuzzprint/net.hpp"
#include "fuzzprint/packet.hpp"
#include "fuzzprint/personality.hpp"
#include "fuzzprint/rng.hpp"
#include "fuzzprint/sim.hpp"
#include "fuzzprint/store.hpp"
#include "fuzzprint/transport.hpp"
