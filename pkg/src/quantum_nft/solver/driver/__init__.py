# Driver package for the Quantum NFT simulator