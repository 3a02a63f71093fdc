# Quantum NFT controller package