#pragma once

#include "zkn/bigint.hpp"
#include "zkn/bytes.hpp"
#include "zkn/canon.hpp"
#include "zkn/errors.hpp"
#include "zkn/evidence.hpp"
#include "zkn/group.hpp"
#include "zkn/hex.hpp"
#include "zkn/ledger.hpp"
#include "zkn/net.hpp"
#include "zkn/rng.hpp"
#include "zkn/session.hpp"
#include "zkn/sha256.hpp"
#include "zkn/sigma.hpp"
#include "zkn/wire.hpp"
