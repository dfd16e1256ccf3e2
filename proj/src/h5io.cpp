#include "misr4d/h5io.hpp"

#include <hdf5.h>

#include <array>
#include <cstring>

namespace misr4d {

namespace {

struct HidGuard {
  hid_t id;
  herr_t (*closer)(hid_t);
  HidGuard(hid_t id_, herr_t (*closer_)(hid_t)) : id(id_), closer(closer_) {}
  ~HidGuard() {
    if (id >= 0) closer(id);
  }
  operator hid_t() const { return id; }
};

void write_attr_double(hid_t obj, const char* name, double v) {
  HidGuard sp(H5Screate(H5S_SCALAR), H5Sclose);
  HidGuard at(H5Acreate2(obj, name, H5T_NATIVE_DOUBLE, sp, H5P_DEFAULT, H5P_DEFAULT), H5Aclose);
  H5Awrite(at, H5T_NATIVE_DOUBLE, &v);
}

void write_attr_int(hid_t obj, const char* name, int v) {
  HidGuard sp(H5Screate(H5S_SCALAR), H5Sclose);
  HidGuard at(H5Acreate2(obj, name, H5T_NATIVE_INT, sp, H5P_DEFAULT, H5P_DEFAULT), H5Aclose);
  H5Awrite(at, H5T_NATIVE_INT, &v);
}

void write_attr_string(hid_t obj, const char* name, const std::string& v) {
  HidGuard tp(H5Tcopy(H5T_C_S1), H5Tclose);
  H5Tset_size(tp, v.size() + 1);
  HidGuard sp(H5Screate(H5S_SCALAR), H5Sclose);
  HidGuard at(H5Acreate2(obj, name, tp, sp, H5P_DEFAULT, H5P_DEFAULT), H5Aclose);
  H5Awrite(at, tp, v.c_str());
}

double read_attr_double(hid_t obj, const char* name) {
  HidGuard at(H5Aopen(obj, name, H5P_DEFAULT), H5Aclose);
  if (at.id < 0) throw config_error(std::string("h5: missing attribute ") + name);
  double v = 0;
  H5Aread(at, H5T_NATIVE_DOUBLE, &v);
  return v;
}

int read_attr_int(hid_t obj, const char* name) {
  HidGuard at(H5Aopen(obj, name, H5P_DEFAULT), H5Aclose);
  if (at.id < 0) throw config_error(std::string("h5: missing attribute ") + name);
  int v = 0;
  H5Aread(at, H5T_NATIVE_INT, &v);
  return v;
}

std::string read_attr_string(hid_t obj, const char* name) {
  HidGuard at(H5Aopen(obj, name, H5P_DEFAULT), H5Aclose);
  if (at.id < 0) throw config_error(std::string("h5: missing attribute ") + name);
  HidGuard tp(H5Aget_type(at), H5Tclose);
  const size_t sz = H5Tget_size(tp);
  std::string buf(sz, '\0');
  H5Aread(at, tp, buf.data());
  buf.resize(std::strlen(buf.c_str()));
  return buf;
}

void write_float_dataset(hid_t file, const char* name, const float* data,
                         const std::vector<hsize_t>& dims) {
  HidGuard sp(H5Screate_simple(static_cast<int>(dims.size()), dims.data(), nullptr), H5Sclose);
  HidGuard ds(H5Dcreate2(file, name, H5T_NATIVE_FLOAT, sp, H5P_DEFAULT, H5P_DEFAULT, H5P_DEFAULT),
              H5Dclose);
  if (ds.id < 0) throw config_error(std::string("h5: cannot create dataset ") + name);
  H5Dwrite(ds, H5T_NATIVE_FLOAT, H5S_ALL, H5S_ALL, H5P_DEFAULT, data);
}

} // namespace

void write_container(const std::string& path, const DataCube4D& cube, const ImageF* ground_truth,
                     const ViewStack* views) {
  cube.check_consistent();
  HidGuard file(H5Fcreate(path.c_str(), H5F_ACC_TRUNC, H5P_DEFAULT, H5P_DEFAULT), H5Fclose);
  if (file.id < 0) throw config_error("h5: cannot create " + path);

  std::vector<hsize_t> dims;
  if (cube.layout == Layout::RealMajor)
    dims = {static_cast<hsize_t>(cube.scan_h), static_cast<hsize_t>(cube.scan_w),
            static_cast<hsize_t>(cube.det_h()), static_cast<hsize_t>(cube.det_w())};
  else
    dims = {static_cast<hsize_t>(cube.det_h()), static_cast<hsize_t>(cube.det_w()),
            static_cast<hsize_t>(cube.scan_h), static_cast<hsize_t>(cube.scan_w)};

  {
    HidGuard sp(H5Screate_simple(4, dims.data(), nullptr), H5Sclose);
    HidGuard ds(H5Dcreate2(file, "/datacube", H5T_NATIVE_FLOAT, sp, H5P_DEFAULT, H5P_DEFAULT,
                           H5P_DEFAULT),
                H5Dclose);
    H5Dwrite(ds, H5T_NATIVE_FLOAT, H5S_ALL, H5S_ALL, H5P_DEFAULT, cube.values.data());
    write_attr_string(ds, "layout", cube.layout == Layout::RealMajor ? "RQ" : "QR");
    write_attr_double(ds, "step_size_A", cube.calib.step_size);
    write_attr_double(ds, "energy_keV", cube.calib.energy);
    write_attr_double(ds, "convergence_mrad", cube.calib.convergence);
    write_attr_double(ds, "defocus_A", cube.calib.defocus);
    write_attr_double(ds, "detector_pixel_mrad", cube.calib.detector_pixel);
    write_attr_double(ds, "center_x", cube.calib.center_x);
    write_attr_double(ds, "center_y", cube.calib.center_y);
    write_attr_int(ds, "signed", cube.signed_values ? 1 : 0);
  }
  if (ground_truth)
    write_float_dataset(file, "/ground_truth", ground_truth->v.data(),
                        {static_cast<hsize_t>(ground_truth->h), static_cast<hsize_t>(ground_truth->w)});
  if (views) {
    write_float_dataset(file, "/views", views->views.data(),
                        {static_cast<hsize_t>(views->v), static_cast<hsize_t>(views->h),
                         static_cast<hsize_t>(views->w)});
    std::vector<float> ang;
    ang.reserve(views->angles.size() * 2);
    for (const auto& a : views->angles) {
      ang.push_back(a[0]);
      ang.push_back(a[1]);
    }
    write_float_dataset(file, "/view_angles_mrad", ang.data(),
                        {static_cast<hsize_t>(views->v), 2});
  }
}

Container read_container(const std::string& path, bool load_cube) {
  HidGuard file(H5Fopen(path.c_str(), H5F_ACC_RDONLY, H5P_DEFAULT), H5Fclose);
  if (file.id < 0) throw config_error("h5: cannot open " + path);
  Container out;

  {
    HidGuard ds(H5Dopen2(file, "/datacube", H5P_DEFAULT), H5Dclose);
    if (ds.id < 0) throw config_error("h5: missing /datacube in " + path);
    HidGuard sp(H5Dget_space(ds), H5Sclose);
    std::array<hsize_t, 4> dims{};
    if (H5Sget_simple_extent_ndims(sp) != 4) throw config_error("h5: /datacube must be 4-D");
    H5Sget_simple_extent_dims(sp, dims.data(), nullptr);

    const std::string layout = read_attr_string(ds, "layout");
    DataCube4D& cube = out.cube;
    cube.layout = (layout == "RQ") ? Layout::RealMajor : Layout::RecipMajor;
    cube.calib.step_size = read_attr_double(ds, "step_size_A");
    cube.calib.energy = read_attr_double(ds, "energy_keV");
    cube.calib.convergence = read_attr_double(ds, "convergence_mrad");
    cube.calib.defocus = read_attr_double(ds, "defocus_A");
    cube.calib.detector_pixel = read_attr_double(ds, "detector_pixel_mrad");
    cube.calib.center_x = read_attr_double(ds, "center_x");
    cube.calib.center_y = read_attr_double(ds, "center_y");
    cube.signed_values = read_attr_int(ds, "signed") != 0;
    if (cube.layout == Layout::RealMajor) {
      cube.scan_h = static_cast<int>(dims[0]);
      cube.scan_w = static_cast<int>(dims[1]);
      cube.calib.det_h = static_cast<int>(dims[2]);
      cube.calib.det_w = static_cast<int>(dims[3]);
    } else {
      cube.calib.det_h = static_cast<int>(dims[0]);
      cube.calib.det_w = static_cast<int>(dims[1]);
      cube.scan_h = static_cast<int>(dims[2]);
      cube.scan_w = static_cast<int>(dims[3]);
    }
    if (load_cube) {
      cube.values.resize(static_cast<size_t>(dims[0]) * dims[1] * dims[2] * dims[3]);
      H5Dread(ds, H5T_NATIVE_FLOAT, H5S_ALL, H5S_ALL, H5P_DEFAULT, cube.values.data());
    }
  }

  if (H5Lexists(file, "/ground_truth", H5P_DEFAULT) > 0) {
    HidGuard ds(H5Dopen2(file, "/ground_truth", H5P_DEFAULT), H5Dclose);
    HidGuard sp(H5Dget_space(ds), H5Sclose);
    std::array<hsize_t, 2> dims{};
    H5Sget_simple_extent_dims(sp, dims.data(), nullptr);
    ImageF gt(static_cast<int>(dims[0]), static_cast<int>(dims[1]));
    H5Dread(ds, H5T_NATIVE_FLOAT, H5S_ALL, H5S_ALL, H5P_DEFAULT, gt.v.data());
    out.ground_truth = std::move(gt);
  }

  if (H5Lexists(file, "/views", H5P_DEFAULT) > 0) {
    HidGuard ds(H5Dopen2(file, "/views", H5P_DEFAULT), H5Dclose);
    HidGuard sp(H5Dget_space(ds), H5Sclose);
    std::array<hsize_t, 3> dims{};
    H5Sget_simple_extent_dims(sp, dims.data(), nullptr);
    ViewStack st;
    st.v = static_cast<int>(dims[0]);
    st.h = static_cast<int>(dims[1]);
    st.w = static_cast<int>(dims[2]);
    st.views.resize(static_cast<size_t>(dims[0]) * dims[1] * dims[2]);
    H5Dread(ds, H5T_NATIVE_FLOAT, H5S_ALL, H5S_ALL, H5P_DEFAULT, st.views.data());
    st.calib = out.cube.calib;
    if (H5Lexists(file, "/view_angles_mrad", H5P_DEFAULT) > 0) {
      HidGuard da(H5Dopen2(file, "/view_angles_mrad", H5P_DEFAULT), H5Dclose);
      std::vector<float> ang(static_cast<size_t>(st.v) * 2);
      H5Dread(da, H5T_NATIVE_FLOAT, H5S_ALL, H5S_ALL, H5P_DEFAULT, ang.data());
      st.angles.resize(st.v);
      for (int k = 0; k < st.v; ++k) st.angles[k] = {ang[2 * k], ang[2 * k + 1]};
    }
    out.views = std::move(st);
  }
  return out;
}

void write_image_h5(const std::string& path, const ImageF& img, const std::string& dataset) {
  HidGuard file(H5Fcreate(path.c_str(), H5F_ACC_TRUNC, H5P_DEFAULT, H5P_DEFAULT), H5Fclose);
  if (file.id < 0) throw config_error("h5: cannot create " + path);
  write_float_dataset(file, dataset.c_str(), img.v.data(),
                      {static_cast<hsize_t>(img.h), static_cast<hsize_t>(img.w)});
}

} // namespace misr4d
