"""Independent movegen oracle for cross-checking the kernel.

Deliberately naive and written against a different representation
(char grids indexed [rank][file]): pseudo-moves come from per-piece
walkers, and legality is decided purely by make-the-move-and-scan —
every enemy piece is asked whether it can reach the king square. Keep
this file free of imports from oodchess.kernel internals; it only
speaks FEN and UCI strings.
"""

from __future__ import annotations

FILES = "abcdefgh"
WHITE_PIECES = "PNBRQK"
BLACK_PIECES = "pnbrqk"


class OracleBoard:
    def __init__(self, fen: str, variant: str = "standard"):
        parts = fen.split()
        self.variant = variant
        self.grid = [["."] * 8 for _ in range(8)]  # [rank][file], rank 0 = rank 1
        for i, row in enumerate(parts[0].split("/")):
            rank = 7 - i
            file = 0
            for ch in row:
                if ch.isdigit():
                    file += int(ch)
                else:
                    self.grid[rank][file] = ch
                    file += 1
        self.white_to_move = parts[1] == "w"
        self.castling = self._parse_castling(parts[2])
        self.ep = None if parts[3] == "-" else (FILES.index(parts[3][0]), int(parts[3][1]) - 1)
        self.halfmove = int(parts[4])
        self.fullmove = int(parts[5])

    def _parse_castling(self, text):
        rights = {}
        if text == "-":
            return rights
        for ch in text:
            white = ch.isupper()
            rank = 0 if white else 7
            king_file = None
            for f in range(8):
                if self.grid[rank][f] == ("K" if white else "k"):
                    king_file = f
            rook = "R" if white else "r"
            u = ch.upper()
            if u == "K":
                for f in range(7, king_file, -1):
                    if self.grid[rank][f] == rook:
                        rights[("w" if white else "b") + "k"] = f
                        break
            elif u == "Q":
                for f in range(0, king_file):
                    if self.grid[rank][f] == rook:
                        rights[("w" if white else "b") + "q"] = f
                        break
            else:
                f = ord(u) - ord("A")
                side = "k" if f > king_file else "q"
                rights[("w" if white else "b") + side] = f
        return rights

    def clone(self):
        other = object.__new__(OracleBoard)
        other.variant = self.variant
        other.grid = [row[:] for row in self.grid]
        other.white_to_move = self.white_to_move
        other.castling = dict(self.castling)
        other.ep = self.ep
        other.halfmove = self.halfmove
        other.fullmove = self.fullmove
        return other

    def piece(self, file, rank):
        return self.grid[rank][file]

    def own(self, ch):
        return ch in (WHITE_PIECES if self.white_to_move else BLACK_PIECES)

    def enemy(self, ch):
        return ch in (BLACK_PIECES if self.white_to_move else WHITE_PIECES)

    def king_pos(self, white):
        target = "K" if white else "k"
        for rank in range(8):
            for file in range(8):
                if self.grid[rank][file] == target:
                    return (file, rank)
        return None

    # -- attack scan: ask every piece of `by_white` whether it reaches (tf, tr)
    def attacked_by(self, tf, tr, by_white):
        for rank in range(8):
            for file in range(8):
                ch = self.grid[rank][file]
                if ch == "." or (ch in WHITE_PIECES) != by_white:
                    continue
                if self._piece_attacks(ch, file, rank, tf, tr):
                    return True
        return False

    def _piece_attacks(self, ch, f, r, tf, tr):
        df, dr = tf - f, tr - r
        kind = ch.upper()
        if kind == "P":
            fwd = 1 if ch == "P" else -1
            return dr == fwd and abs(df) == 1
        if kind == "N":
            return sorted((abs(df), abs(dr))) == [1, 2]
        if kind == "K":
            return max(abs(df), abs(dr)) == 1
        if kind == "R":
            if df != 0 and dr != 0:
                return False
        elif kind == "B":
            if abs(df) != abs(dr):
                return False
        elif kind == "Q":
            if df != 0 and dr != 0 and abs(df) != abs(dr):
                return False
        if df == 0 and dr == 0:
            return False
        sf = (df > 0) - (df < 0)
        sr = (dr > 0) - (dr < 0)
        cf, cr = f + sf, r + sr
        while (cf, cr) != (tf, tr):
            if self.grid[cr][cf] != ".":
                return False
            cf += sf
            cr += sr
        return True

    # -- pseudo-moves as UCI strings
    def pseudo_moves(self):
        moves = []
        for rank in range(8):
            for file in range(8):
                ch = self.grid[rank][file]
                if ch == "." or not self.own(ch):
                    continue
                kind = ch.upper()
                if kind == "P":
                    moves.extend(self._pawn_moves(ch, file, rank))
                elif kind == "N":
                    moves.extend(self._jump_moves(file, rank,
                                                  [(1, 2), (2, 1), (2, -1), (1, -2),
                                                   (-1, -2), (-2, -1), (-2, 1), (-1, 2)]))
                elif kind == "K":
                    moves.extend(self._jump_moves(file, rank,
                                                  [(0, 1), (1, 1), (1, 0), (1, -1),
                                                   (0, -1), (-1, -1), (-1, 0), (-1, 1)]))
                else:
                    dirs = []
                    if kind in "RQ":
                        dirs += [(0, 1), (0, -1), (1, 0), (-1, 0)]
                    if kind in "BQ":
                        dirs += [(1, 1), (1, -1), (-1, 1), (-1, -1)]
                    moves.extend(self._slide_moves(file, rank, dirs))
        moves.extend(self._castle_moves())
        return moves

    def _uci(self, f, r, tf, tr, promo=""):
        return FILES[f] + str(r + 1) + FILES[tf] + str(tr + 1) + promo

    def _pawn_moves(self, ch, f, r):
        out = []
        white = ch == "P"
        fwd = 1 if white else -1
        last = 7 if white else 0
        start_ranks = [1] if white else [6]
        if white and self.variant == "horde":
            start_ranks = [0, 1]
        if self.grid[r + fwd][f] == ".":
            if r + fwd == last:
                out += [self._uci(f, r, f, r + fwd, p) for p in "qrbn"]
            else:
                out.append(self._uci(f, r, f, r + fwd))
                if r in start_ranks and self.grid[r + 2 * fwd][f] == ".":
                    out.append(self._uci(f, r, f, r + 2 * fwd))
        for df in (-1, 1):
            tf, tr = f + df, r + fwd
            if not (0 <= tf < 8 and 0 <= tr < 8):
                continue
            target = self.grid[tr][tf]
            if target != "." and self.enemy(target):
                if tr == last:
                    out += [self._uci(f, r, tf, tr, p) for p in "qrbn"]
                else:
                    out.append(self._uci(f, r, tf, tr))
            elif self.ep is not None and (tf, tr) == self.ep:
                out.append(self._uci(f, r, tf, tr))
        return out

    def _jump_moves(self, f, r, deltas):
        out = []
        for df, dr in deltas:
            tf, tr = f + df, r + dr
            if 0 <= tf < 8 and 0 <= tr < 8:
                target = self.grid[tr][tf]
                if target == "." or self.enemy(target):
                    out.append(self._uci(f, r, tf, tr))
        return out

    def _slide_moves(self, f, r, dirs):
        out = []
        for df, dr in dirs:
            tf, tr = f + df, r + dr
            while 0 <= tf < 8 and 0 <= tr < 8:
                target = self.grid[tr][tf]
                if target == ".":
                    out.append(self._uci(f, r, tf, tr))
                elif self.enemy(target):
                    out.append(self._uci(f, r, tf, tr))
                    break
                else:
                    break
                tf += df
                tr += dr
        return out

    def _castle_moves(self):
        out = []
        color = "w" if self.white_to_move else "b"
        rank = 0 if self.white_to_move else 7
        kp = self.king_pos(self.white_to_move)
        if kp is None or kp[1] != rank:
            return out
        kf = kp[0]
        for side, k_dest_f, r_dest_f in (("k", 6, 5), ("q", 2, 3)):
            rf = self.castling.get(color + side)
            if rf is None:
                continue
            # Squares that must be empty (other than king and rook).
            needed = set()
            for a, b in ((kf, k_dest_f), (rf, r_dest_f)):
                lo, hi = min(a, b), max(a, b)
                needed.update(range(lo, hi + 1))
            needed -= {kf, rf}
            if any(self.grid[rank][f] != "." for f in needed):
                continue
            # King must not be in, pass through, or land in check; test
            # each king step plus the final arrangement by making it.
            ok = True
            step = 1 if k_dest_f >= kf else -1
            for f in range(kf, k_dest_f, step):
                probe = self.clone()
                probe.grid[rank][kf] = "."
                probe.grid[rank][f] = "K" if self.white_to_move else "k"
                if probe.attacked_by(f, rank, not self.white_to_move):
                    ok = False
                    break
            if ok:
                probe = self.clone()
                probe.grid[rank][kf] = "."
                probe.grid[rank][rf] = "."
                probe.grid[rank][k_dest_f] = "K" if self.white_to_move else "k"
                probe.grid[rank][r_dest_f] = "R" if self.white_to_move else "r"
                if probe.attacked_by(k_dest_f, rank, not self.white_to_move):
                    ok = False
            if ok:
                if self.variant == "chess960":
                    out.append(self._uci(kf, rank, rf, rank))
                else:
                    out.append(self._uci(kf, rank, k_dest_f, rank))
        return out

    def _is_castle(self, uci):
        f, r = FILES.index(uci[0]), int(uci[1]) - 1
        tf, tr = FILES.index(uci[2]), int(uci[3]) - 1
        ch = self.grid[r][f]
        if ch.upper() != "K":
            return False
        if self.variant == "chess960":
            target = self.grid[tr][tf]
            return target != "." and not self.enemy(target) and target.upper() == "R"
        return abs(tf - f) == 2

    def make(self, uci):
        """Apply a pseudo-legal move in place, clocks included."""
        f, r = FILES.index(uci[0]), int(uci[1]) - 1
        tf, tr = FILES.index(uci[2]), int(uci[3]) - 1
        ch = self.grid[r][f]
        color = "w" if self.white_to_move else "b"
        target = self.grid[tr][tf]
        is_capture = (self.enemy(target) if target != "." else
                      (ch.upper() == "P" and self.ep is not None
                       and (tf, tr) == self.ep and tf != f))
        if ch.upper() == "P" or is_capture:
            self.halfmove = 0
        else:
            self.halfmove += 1
        if not self.white_to_move:
            self.fullmove += 1
        if self._is_castle(uci):
            if self.variant == "chess960":
                rf = tf
                kingside = tf > f
            else:
                kingside = tf > f
                rf = self.castling[color + ("k" if kingside else "q")]
            self.grid[r][f] = "."
            self.grid[r][rf] = "."
            self.grid[r][6 if kingside else 2] = "K" if self.white_to_move else "k"
            self.grid[r][5 if kingside else 3] = "R" if self.white_to_move else "r"
        else:
            if ch.upper() == "P" and self.ep is not None and (tf, tr) == self.ep and tf != f:
                self.grid[r][tf] = "."  # en passant victim sits beside the pawn
            self.grid[r][f] = "."
            if len(uci) == 5:
                promo = uci[4]
                self.grid[tr][tf] = promo.upper() if self.white_to_move else promo
            else:
                self.grid[tr][tf] = ch
        # ep bookkeeping: classic double pushes only
        self.ep = None
        if ch == "P" and r == 1 and tr == 3 and f == tf:
            self.ep = (f, 2)
        elif ch == "p" and r == 6 and tr == 4 and f == tf:
            self.ep = (f, 5)
        # castling rights
        if ch in "Kk":
            self.castling.pop(color + "k", None)
            self.castling.pop(color + "q", None)
        if ch in "Rr":
            back = 0 if self.white_to_move else 7
            if r == back:
                for side in "kq":
                    if self.castling.get(color + side) == f:
                        self.castling.pop(color + side)
        opp = "b" if self.white_to_move else "w"
        opp_back = 7 if self.white_to_move else 0
        if tr == opp_back:
            for side in "kq":
                if self.castling.get(opp + side) == tf:
                    self.castling.pop(opp + side)
        self.white_to_move = not self.white_to_move

    def legal_moves(self):
        """Pseudo-moves filtered by make + scan for own-king capture."""
        out = []
        mover_white = self.white_to_move
        for uci in self.pseudo_moves():
            probe = self.clone()
            probe.make(uci)
            kp = probe.king_pos(mover_white)
            if kp is None:
                out.append(uci)
                continue
            if not probe.attacked_by(kp[0], kp[1], not mover_white):
                out.append(uci)
        return sorted(out)

    def perft(self, depth):
        if depth == 0:
            return 1
        moves = self.legal_moves()
        if depth == 1:
            return len(moves)
        total = 0
        for uci in moves:
            probe = self.clone()
            probe.make(uci)
            total += probe.perft(depth - 1)
        return total
