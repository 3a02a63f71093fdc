# Quantum NFT model package