"""Train the tiny diffusion denoiser on synthetic phantoms.

Uses a short schedule and a modest phantom count so the script finishes in a
few minutes on a laptop; bump EPOCHS / N_PHANTOMS for better reconstruction
quality in demo 03.  Writes `tiny_denoiser.spaw` and a loss-curve figure.

Run:  python demos/02_train_denoiser.py
"""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

import spamri as sp

N_PHANTOMS = 200
EPOCHS = 120  # ~5 minutes; 400+ gives noticeably better priors
T = 1000

schedule = sp.cosine_schedule(T)
print(f"generating {N_PHANTOMS} training phantoms ...")
data = [
    sp.to_pseudo_real(sp.normalize(sp.gen_phantom(64, 64, seed).image)[0])
    for seed in range(N_PHANTOMS)
]

print(f"training for {EPOCHS} epochs ...")
weights = sp.train_tiny_denoiser(data, schedule, epochs=EPOCHS, lr=3e-4, seed=0)
print(f"parameters: {weights.n_params():,}")
print(f"noise-prediction MSE: {weights.epoch_losses[0]:.4f} -> {weights.epoch_losses[-1]:.4f}")

sp.save_weights("tiny_denoiser.spaw", weights)
print("wrote tiny_denoiser.spaw")

fig, ax = plt.subplots(figsize=(5, 3))
ax.plot(weights.epoch_losses)
ax.set_xlabel("epoch")
ax.set_ylabel("noise-prediction MSE")
ax.set_yscale("log")
fig.tight_layout()
fig.savefig("training_loss.png", dpi=120)
print("wrote training_loss.png")
