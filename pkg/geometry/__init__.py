# Local energies and decoders
