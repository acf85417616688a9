// Estimates one random 36x144 channel with the two-stage sounder and prints
// what the estimate captures.

#include <iomanip>
#include <iostream>
#include <memory>

#include "sase/sase.hpp"

int main(int argc, char** argv) {
  using namespace sase;
  const double snr_db = argc > 1 ? std::stod(argv[1]) : 10.0;
  const Index n_r = 36, n_t = 144, paths = 4;

  RngStream channel_rng(7);
  const PathSet p = sample_paths(paths, ArrayKind::ula, channel_rng);
  const ChannelInstance h = assemble_channel(p, ArrayGeometry::ula(n_r), ArrayGeometry::ula(n_t));

  SaseParams params;  // m = 20, M_RF = 6, N_RF = 8, L = 4
  params.rx_dictionary = std::make_shared<const Dictionary>(default_dictionary(ArrayGeometry::ula(n_r)));
  params.tx_dictionary = std::make_shared<const Dictionary>(default_dictionary(ArrayGeometry::ula(n_t)));

  const double sigma2 = noise_variance_from_snr_db(snr_db);
  RngStream noise_rng(8);
  NoiseModel noise(sigma2, noise_rng);
  const SaseResult est = run_sase(h, params, noise);

  const CMatrix& w = est.w_hat.product;
  const CMatrix& f = est.f_hat.product;
  const ChannelEstimate h_hat = reconstruct_channel(w, f, est.stage1.y_post_dft, est.stage2.q_c);

  std::cout << std::fixed << std::setprecision(4);
  std::cout << "SNR " << snr_db << " dB, " << est.stage1.channel_uses + est.stage2.channel_uses
            << " channel uses\n";
  std::cout << "  eta     " << eta(w, f, h.matrix) << "\n";
  std::cout << "  eta_c   " << eta_c(w, h.matrix) << "\n";
  std::cout << "  eta_r   " << eta_r(f, h.matrix) << "\n";
  std::cout << "  NMSE    " << nmse(h.matrix, h_hat.dense()) << "\n";
  std::cout << "  rate    " << spectrum_efficiency(w, f, h.matrix, sigma2, paths) << " bits/s/Hz (perfect CSI "
            << spectrum_efficiency(h.left_frame(paths), h.right_frame(paths), h.matrix, sigma2, paths) << ")\n";
  std::cout << "  analog receive beams use dictionary atoms";
  for (Index a : est.w_hat.atoms) std::cout << ' ' << a;
  std::cout << "\n";
  return 0;
}
