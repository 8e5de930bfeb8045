# %% [markdown]
# # Sub-wavelength hot spots behind a quasicrystal of holes
#
# A tenfold array of small holes lit by a plane wave produces, some distance
# behind it, bright spots narrower than the wavelength. All lengths in microns.

# %%
import warnings

from superwave.field import Grid2D
from superwave.propagate import HoleArraySpec, carpet_scan, quasiperiodic_mask

spec = HoleArraySpec(aperture_diameter=16.0, seed=1)
mask = quasiperiodic_mask(spec, Grid2D.centered(768, 1 / 30))
print(f"{mask.meta['n_holes']} holes of {spec.hole_diameter} um, minimum separation {spec.min_separation} um")

# %%
with warnings.catch_warnings():
    warnings.simplefilter("ignore", RuntimeWarning)  # hard-edged holes reach the Nyquist band
    reports = carpet_scan(mask, 0.5, [3.0, 6.0, 9.0], threshold=0.3)
for rep in reports:
    s = rep.smallest()
    if s is None:
        print(f"z = {rep.z:4.1f}: no spots")
        continue
    print(f"z = {rep.z:4.1f}: {len(rep.spots)} spots, smallest FWHM {s.fwhm:.3f} um "
          f"({'below' if s.fwhm < 0.5 else 'above'} the 0.5 um wavelength)")
