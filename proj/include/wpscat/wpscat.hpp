#pragma once

#include "wpscat/golden.hpp"
#include "wpscat/numerics.hpp"
#include "wpscat/packets.hpp"
#include "wpscat/scattered_packet.hpp"
#include "wpscat/stationary.hpp"
#include "wpscat/vec3.hpp"
#include "wpscat/version.hpp"
