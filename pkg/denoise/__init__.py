# Denoising projection
