"""Pure-pixel initialization and abundance maps on a spatial scene.

Builds an image-shaped scene (48 x 36 pixels, 3 library spectra) whose
abundances are smooth spatial blobs, so every material has a few nearly
pure pixels somewhere in the frame.  The simplex-based initializer picks
those pixels straight out of the data, NNLS fills in starting
abundances, and the solver prunes the rank-8 overestimate down to 3.
The surviving abundance columns are written as one 16-bit PGM image per
endmember next to the CSV results.

Run:  python3 demos/vca_init_and_maps.py
"""

import os
import tempfile

import numpy as np

import slrnmf

HEIGHT, WIDTH, N, R = 48, 36, 3, 8
K = HEIGHT * WIDTH

# one Gaussian blob per material, plus a faint uniform background so no
# pixel is exactly empty
rows, cols = np.mgrid[0:HEIGHT, 0:WIDTH]
centers = [(12, 9), (24, 27), (38, 12)]
maps = []
for cr, cc in centers:
    blob = np.exp(-((rows - cr) ** 2 + (cols - cc) ** 2) / (2 * 6.0 ** 2))
    maps.append(blob.ravel())
w_true = np.stack(maps, axis=1) + 0.02

phi_true = slrnmf.gen_endmembers(224, N, "library-file", seed=3)
truth = slrnmf.GroundTruth(phi_true=phi_true, w_true=w_true,
                           sigma=1e-3, seed=3)
y = slrnmf.mix_and_noise(truth)
print("scene: %d bands, %d x %d pixels, %d materials"
      % (y.shape[0], HEIGHT, WIDTH, N))

# simplex init: the selected columns are actual pixels from the scene
phi0 = slrnmf.init_vca(y, R, seed=3)
w0 = slrnmf.nnls_abundances(y, phi0)
print("init: %d candidate endmembers picked from the data, "
      "NNLS abundances in [%.3f, %.3f]" % (R, w0.min(), w0.max()))

phi, w, report = slrnmf.solve(y, phi0, w0, slrnmf.SolverConfig(r=R, seed=3))
print("pruned %d -> %d endmembers in %d iterations"
      % (R, report.final_effective_rank, report.iterations))

result = slrnmf.evaluate_unmixing(phi, truth.phi_true, w, truth.w_true)
print("spectral angles (deg):", np.round(result.per_pair_sam_degrees, 3),
      " abundance RMSE %.5f" % result.abundance_rmse)

out_dir = os.path.join(tempfile.gettempdir(), "slrnmf_vca_demo")
written = slrnmf.save_results(phi, w, report, out_dir,
                              height=HEIGHT, width=WIDTH)
print("wrote results to %s:" % out_dir)
for name in sorted(os.listdir(out_dir)):
    print("  %s" % name)

# each PGM is min-max scaled on its own; the report records the scaling
values = slrnmf.read_report(written["report"])
for i in range(report.final_effective_rank):
    lo = values["maps.map_%d.min" % i]
    hi = values["maps.map_%d.max" % i]
    print("map_%d.pgm scaled from [%.4g, %.4g]" % (i, lo, hi))
