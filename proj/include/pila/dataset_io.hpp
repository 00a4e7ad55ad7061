#pragma once

#include <filesystem>

#include "pila/gnss.hpp"

namespace pila::gnss {

// Dataset directory:
//   stations.csv          station,x_km,y_km
//   observations.csv      date,station,east_mm,north_mm,up_mm (long format, offsets added back)
//   samples.csv           day,<E_/N_/U_ columns> (exact matrix, mm)
//   truth_volcanic.csv, truth_trend.csv, truth_seasonal.csv, truth_noise.csv   same layout
//   truth_params.csv      day,xm_km,ym_km,depth_km,dv_m3
//   meta.ini              start date, event window, offsets flag
// Truth files are only present for synthetic data.
void write_dataset(const Dataset& data, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

// Day-indexed matrix CSV: `day,<names...>`.
void write_matrix_csv(const std::filesystem::path& path, std::span<const long> days,
                      const std::vector<std::string>& names, const Tensor& m);
Tensor read_matrix_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
                       std::vector<long>* days = nullptr);

}  // namespace pila::gnss
