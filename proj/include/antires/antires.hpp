#pragma once

#include "antires/characterize.hpp"
#include "antires/error.hpp"
#include "antires/fits.hpp"
#include "antires/heterodyne.hpp"
#include "antires/motion.hpp"
#include "antires/network.hpp"
#include "antires/network_io.hpp"
#include "antires/nlls.hpp"
#include "antires/oracle.hpp"
#include "antires/parallel.hpp"
#include "antires/poles.hpp"
#include "antires/report.hpp"
#include "antires/scenarios.hpp"
#include "antires/spectrum.hpp"
