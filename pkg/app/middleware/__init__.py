"""
명령 실행 경계 (에러 처리, 산출물 직렬화)
"""
