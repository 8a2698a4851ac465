#pragma once

#include <cohset/coherence.hpp>
#include <cohset/config.hpp>
#include <cohset/errors.hpp>
#include <cohset/etd.hpp>
#include <cohset/experiments.hpp>
#include <cohset/fft.hpp>
#include <cohset/flow_io.hpp>
#include <cohset/flows.hpp>
#include <cohset/fokker_planck.hpp>
#include <cohset/grid.hpp>
#include <cohset/io.hpp>
#include <cohset/parallel.hpp>
#include <cohset/spectral.hpp>
#include <cohset/transfer.hpp>
#include <cohset/ulam.hpp>
#include <cohset/vorticity.hpp>
