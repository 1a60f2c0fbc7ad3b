from utils.exceptions import ContractException


def chunk_sizes(n: int, num_chunks: int) -> list:
    """floor(n / num_chunks) per chunk; the remainder goes to the last (target-side) chunk."""
    if num_chunks < 1:
        raise ContractException(f"num_chunks must be >= 1, got {num_chunks}")
    if num_chunks > n:
        raise ContractException(f"cannot split {n} examples into {num_chunks} non-empty chunks")
    base = n // num_chunks
    return [base] * (num_chunks - 1) + [n - base * (num_chunks - 1)]
