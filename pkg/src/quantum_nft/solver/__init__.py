# Quantum NFT solver package