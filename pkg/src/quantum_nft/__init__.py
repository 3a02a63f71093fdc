# Quantum NFT network simulator package